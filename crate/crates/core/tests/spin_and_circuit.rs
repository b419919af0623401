use sawtooth_core::bound_state::bound_state_wavefunction;
use sawtooth_core::circuit::{extract_effective_hopping, simulate_parametric_pair, ParametricPairConfig};
use sawtooth_core::dynamics::{Emitter, EmitterArrangement};
use sawtooth_core::lattice::{band_extrema, wrap_phase};
use sawtooth_core::spin_model::{effective_couplings, loop_phase, triangle_arrangement, validate_exchange};
use sawtooth_core::{LatticeParams, Sublattice};
use std::f64::consts::PI;

fn mid_gap(p: &LatticeParams) -> f64 {
    let e = band_extrema(p);
    0.5 * (e.lower_max.energy + e.upper_min.energy)
}

fn pair(delta: f64, g: f64, s: (Sublattice, Sublattice), x: (usize, usize)) -> EmitterArrangement {
    EmitterArrangement::new(vec![
        Emitter { delta, g, sublattice: s.0, site: x.0 },
        Emitter { delta, g, sublattice: s.1, site: x.1 },
    ])
}

#[test]
fn zero_flux_couplings_are_real() {
    let p = LatticeParams::new(1.0, 0.8, 0.0).unwrap();
    let d = mid_gap(&p);
    let m = effective_couplings(&triangle_arrangement(d, 0.1, 3), &p, d).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let c = m.coupling(i, j);
            assert!(c.im.abs() <= 1e-12 * c.norm().max(1e-300));
        }
    }
    let phase = loop_phase(&m, &[0, 1, 2]).unwrap();
    assert!(phase.abs() < 1e-8 || (phase.abs() - PI).abs() < 1e-8);
}

#[test]
fn couplings_are_translation_invariant() {
    let p = LatticeParams::new(1.0, 1.0, 1.4).unwrap();
    let d = mid_gap(&p);
    let a = effective_couplings(&triangle_arrangement(d, 0.1, 0), &p, d).unwrap();
    let b = effective_couplings(&triangle_arrangement(d, 0.1, 37), &p, d).unwrap();
    assert_eq!(a.couplings, b.couplings);
}

#[test]
fn couplings_vanish_far_apart() {
    let p = LatticeParams::new(1.0, 1.0, 1.4).unwrap();
    let d = mid_gap(&p);
    let xi = bound_state_wavefunction(d, Sublattice::A, &p, 0.1, None).unwrap().xi;
    let r = (50.0 * xi).ceil() as usize;
    let near = effective_couplings(&pair(d, 0.1, (Sublattice::A, Sublattice::A), (0, 1)), &p, d).unwrap();
    let far = effective_couplings(&pair(d, 0.1, (Sublattice::A, Sublattice::A), (0, r)), &p, d).unwrap();
    assert!(far.coupling(0, 1).norm() < 1e-8 * near.coupling(0, 1).norm());
}

#[test]
fn loop_phase_is_continuous_in_flux() {
    let p0 = LatticeParams::new(1.0, 1.0, 0.0).unwrap();
    let mut prev: Option<f64> = None;
    for i in 0..=40 {
        let phi = 0.3 + 1.0 * i as f64 / 40.0;
        let p = LatticeParams { phi, ..p0 };
        let d = mid_gap(&p);
        let m = effective_couplings(&triangle_arrangement(d, 0.1, 0), &p, d).unwrap();
        let ph = loop_phase(&m, &[0, 1, 2]).unwrap();
        if let Some(q) = prev {
            assert!(wrap_phase(ph - q).abs() < 0.3, "jump at phi {phi}");
        }
        prev = Some(ph);
    }
}

#[test]
fn exchange_frequency_matches_the_effective_model() {
    let p = LatticeParams::new(1.0, 1.0, 1.0).unwrap().with_cells(200);
    let d = mid_gap(&p);
    let v = validate_exchange(&pair(d, 0.05, (Sublattice::A, Sublattice::A), (100, 102)), &p, None).unwrap();
    assert!(v.relative_error < 0.05, "{v:?}");
}

#[test]
fn exchange_weakens_with_distance() {
    let p = LatticeParams::new(1.0, 1.0, 1.0).unwrap();
    let d = mid_gap(&p);
    let j = |r| {
        effective_couplings(&pair(d, 0.05, (Sublattice::B, Sublattice::B), (0, r)), &p, d)
            .unwrap()
            .coupling(0, 1)
            .norm()
    };
    assert!(j(3) < j(1));
}

#[test]
fn coupler_phase_follows_the_drive() {
    for phi in [-3.0, -1.2, 0.0, 0.4, 2.5] {
        let cfg = ParametricPairConfig::with_defaults(1.0, 0.05, 1e-3, phi);
        let tr = simulate_parametric_pair(&cfg).unwrap();
        let h = extract_effective_hopping(&tr, &cfg).unwrap();
        assert!(wrap_phase(h.phase - phi).abs() < 1e-2, "phi {phi}: {}", h.phase);
        assert!(h.warning.is_none());
    }
}

#[test]
fn coupler_ignores_phase_winding_and_global_phase() {
    let cfg = ParametricPairConfig::with_defaults(1.0, 0.05, 1e-3, 0.8);
    let wound = ParametricPairConfig { phi: 0.8 + 2.0 * PI, ..cfg };
    let a = extract_effective_hopping(&simulate_parametric_pair(&cfg).unwrap(), &cfg).unwrap();
    let b = extract_effective_hopping(&simulate_parametric_pair(&wound).unwrap(), &wound).unwrap();
    assert!((a.value - b.value).norm() < 1e-9 * a.magnitude);

    let mut tr = simulate_parametric_pair(&cfg).unwrap();
    let twist = num_complex::Complex64::from_polar(1.0, 2.1);
    tr.c1.iter_mut().chain(tr.c2.iter_mut()).for_each(|c| *c *= twist);
    let c = extract_effective_hopping(&tr, &cfg).unwrap();
    assert!((a.value - c.value).norm() < 1e-6 * a.magnitude);
}

#[test]
fn coupler_magnitude_approaches_half_drive() {
    let errs: Vec<f64> = [0.02, 0.04, 0.08]
        .iter()
        .map(|&delta| {
            let cfg = ParametricPairConfig::with_defaults(1.0, delta, 1e-3, 1.0);
            let h = extract_effective_hopping(&simulate_parametric_pair(&cfg).unwrap(), &cfg).unwrap();
            (h.magnitude / 5e-4 - 1.0).abs()
        })
        .collect();
    assert!(errs[1] < 0.6 * errs[0] && errs[2] < 0.6 * errs[1], "{errs:?}");
}

#[test]
fn full_swap_takes_pi_over_j() {
    let cfg = ParametricPairConfig::with_defaults(1.0, 0.05, 1e-3, 0.0);
    let tr = simulate_parametric_pair(&cfg).unwrap();
    let (i, _) = tr
        .c2
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .unwrap();
    let t_swap = tr.times[i];
    assert!((t_swap - PI / 1e-3).abs() < 0.02 * PI / 1e-3, "{t_swap}");
}
