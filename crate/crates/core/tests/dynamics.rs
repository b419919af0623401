use proptest::prelude::*;
use sawtooth_core::bound_state::{bound_state_energy, bound_state_wavefunction, gap_regions};
use sawtooth_core::dynamics::{
    build_hamiltonian, directional_fractions, emitter_amplitude, evolve, photon_populations, Boundary,
    EmitterArrangement, Method, SingleExcitationState,
};
use sawtooth_core::emission::{decay_channels, directionality_ratio};
use sawtooth_core::lattice::band_extrema;
use sawtooth_core::{LatticeParams, Sublattice};
use std::f64::consts::PI;

fn run(p: &LatticeParams, em: &EmitterArrangement, b: Boundary, times: &[f64], m: Method) -> Vec<SingleExcitationState> {
    let h = build_hamiltonian(p, em, b).unwrap();
    let s0 = SingleExcitationState::excited_emitter(p.n_cells, em.len(), 0);
    evolve(&s0, &h, times, m).unwrap().states
}

fn max_diff(x: &SingleExcitationState, y: &SingleExcitationState) -> f64 {
    x.to_vector()
        .iter()
        .zip(y.to_vector())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

#[test]
fn chebyshev_agrees_with_dense() {
    let p = LatticeParams::new(1.0, 0.7, 1.1).unwrap().with_cells(50);
    let em = EmitterArrangement::single(-0.4, 0.2, Sublattice::B, 25);
    let times = [0.0, 1.5, 7.0, 30.0];
    let d = run(&p, &em, Boundary::Periodic, &times, Method::Dense);
    let c = run(&p, &em, Boundary::Periodic, &times, Method::Chebyshev);
    for (x, y) in d.iter().zip(&c) {
        assert!(max_diff(x, y) < 1e-8);
    }
}

#[test]
fn boundaries_are_invisible_before_arrival() {
    let p = LatticeParams::new(1.0, 1.0, 0.6).unwrap().with_cells(120);
    let em = EmitterArrangement::single(-0.5, 0.3, Sublattice::A, 60);
    let times = [4.0];
    let a = run(&p, &em, Boundary::Periodic, &times, Method::Dense);
    let b = run(&p, &em, Boundary::Open, &times, Method::Dense);
    assert!(max_diff(&a[0], &b[0]) < 1e-8);
}

#[test]
fn light_cone_is_respected() {
    let p = LatticeParams::new(1.0, 1.0, 0.6).unwrap().with_cells(120);
    let em = EmitterArrangement::single(-0.5, 0.3, Sublattice::B, 60);
    let s = &run(&p, &em, Boundary::Open, &[3.0], Method::Dense)[0];
    let far: f64 = (0..120)
        .filter(|c| (*c as i64 - 60).abs() > 40)
        .map(|c| s.c_a[c].norm_sqr() + s.c_b[c].norm_sqr())
        .sum();
    assert!(far < 1e-12, "{far}");
}

#[test]
fn flux_reversal_keeps_survival() {
    let p = LatticeParams::new(1.0, 0.5, 1.2).unwrap().with_cells(60);
    let q = LatticeParams { phi: -p.phi, ..p };
    let em = EmitterArrangement::single(-0.2, 0.2, Sublattice::B, 30);
    let times: Vec<f64> = (0..20).map(|i| i as f64 * 1.3).collect();
    let a = run(&p, &em, Boundary::Periodic, &times, Method::Dense);
    let b = run(&q, &em, Boundary::Periodic, &times, Method::Dense);
    for (x, y) in a.iter().zip(&b) {
        assert!((x.c_e[0].norm_sqr() - y.c_e[0].norm_sqr()).abs() < 1e-10);
    }
}

#[test]
fn detuned_emitter_settles_on_its_bound_states() {
    let p = LatticeParams::new(1.0, 1.0, 0.9).unwrap().with_cells(100);
    let e = band_extrema(&p);
    let (delta, g, d) = (e.lower_min.energy - 1.0, 0.4, Sublattice::A);
    let mut predicted = 0.0;
    for gap in gap_regions(&p).iter() {
        if let Some(bs) = bound_state_energy(&gap, delta, d, &p, g).unwrap() {
            let rec = bound_state_wavefunction(bs.energy, d, &p, g, None).unwrap();
            predicted += rec.c_e.norm_sqr().powi(2);
        }
    }
    let em = EmitterArrangement::single(delta, g, d, 50);
    let times: Vec<f64> = (0..400).map(|i| 100.0 + i as f64 * 0.77).collect();
    let tr = evolve(
        &SingleExcitationState::excited_emitter(100, 1, 0),
        &build_hamiltonian(&p, &em, Boundary::Periodic).unwrap(),
        &times,
        Method::Dense,
    )
    .unwrap();
    let mean = emitter_amplitude(&tr, 0).survival.iter().sum::<f64>() / times.len() as f64;
    assert!((mean - predicted).abs() < 0.01, "{mean} vs {predicted}");
}

#[test]
fn photon_weight_leaves_in_the_predicted_direction() {
    let p = LatticeParams::new(1.0, 0.5, PI / 2.0 - 0.1).unwrap().with_cells(300);
    let (delta, g, d) = (-0.3, 0.1, Sublattice::B);
    let expect = directionality_ratio(&decay_channels(delta, d, &p, g).unwrap()).global_left;
    let em = EmitterArrangement::single(delta, g, d, 150);
    let s = &run(&p, &em, Boundary::Periodic, &[60.0], Method::Dense)[0];
    let f = directional_fractions(s, 150, 3, Boundary::Periodic).unwrap();
    assert!((f.left + f.right - 1.0).abs() < 1e-12);
    assert!((f.left - expect).abs() < 0.1, "{} vs {expect}", f.left);
}

#[test]
fn populations_sum_to_one() {
    let p = LatticeParams::new(1.0, 1.0, 0.3).unwrap().with_cells(40);
    let em = EmitterArrangement::single(0.1, 0.3, Sublattice::A, 20);
    let h = build_hamiltonian(&p, &em, Boundary::Open).unwrap();
    let tr = evolve(
        &SingleExcitationState::excited_emitter(40, 1, 0),
        &h,
        &[0.0, 2.0, 9.0],
        Method::Auto,
    )
    .unwrap();
    let pop = photon_populations(&tr);
    for i in 0..3 {
        let s: f64 = pop.a[i].iter().chain(&pop.b[i]).chain(&pop.emitters[i]).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn evolution_is_unitary(jab in 0.2f64..1.5, phi in -PI..PI, delta in -2.0f64..2.0, t in 0.0f64..50.0) {
        let p = LatticeParams::new(1.0, jab, phi).unwrap().with_cells(30);
        let em = EmitterArrangement::single(delta, 0.2, Sublattice::B, 10);
        let s = &run(&p, &em, Boundary::Open, &[t], Method::Chebyshev)[0];
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }
}
