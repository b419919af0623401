use proptest::prelude::*;
use sawtooth_core::emission::{decay_channels, directionality_ratio, sweep_map, RatioKind};
use sawtooth_core::green::spectral_parameters;
use sawtooth_core::lattice::band_extrema;
use sawtooth_core::{Band, LatticeParams, Sublattice};
use std::f64::consts::PI;

fn in_band(p: &LatticeParams, band: Band, frac: f64) -> f64 {
    let (lo, hi) = band_extrema(p).range(band);
    lo + frac * (hi - lo)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn a_emitters_radiate_symmetrically(jab in 0.1f64..2.0, phi in -PI..PI, frac in 0.02f64..0.98, upper in any::<bool>()) {
        let p = LatticeParams::new(1.0, jab, phi).unwrap();
        let band = if upper { Band::Upper } else { Band::Lower };
        let delta = in_band(&p, band, frac);
        if let Ok(ch) = decay_channels(delta, Sublattice::A, &p, 0.1) {
            let r = directionality_ratio(&ch);
            prop_assert!((r.global_left - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn flux_reversal_swaps_directions(jab in 0.1f64..2.0, phi in -PI..PI, frac in 0.02f64..0.98) {
        let p = LatticeParams::new(1.0, jab, phi).unwrap();
        let q = LatticeParams { phi: -phi, ..p };
        let delta = in_band(&p, Band::Lower, frac);
        if let (Ok(a), Ok(b)) = (decay_channels(delta, Sublattice::B, &p, 0.1), decay_channels(delta, Sublattice::B, &q, 0.1)) {
            let (ra, rb) = (directionality_ratio(&a), directionality_ratio(&b));
            prop_assert!((ra.global_left - rb.global_right).abs() < 1e-8);
        }
    }

    #[test]
    fn channels_add_up_to_the_decay_rate(jab in 0.1f64..2.0, phi in -PI..PI, frac in 0.02f64..0.98) {
        let p = LatticeParams::new(1.0, jab, phi).unwrap();
        let delta = in_band(&p, Band::Upper, frac);
        for d in [Sublattice::A, Sublattice::B] {
            if let Ok(ch) = decay_channels(delta, d, &p, 0.1) {
                let gamma = spectral_parameters(delta, d, &p, 0.1).unwrap().decay_rate;
                prop_assert!((ch.total() - gamma).abs() < 1e-8 * gamma);
            }
        }
    }
}

#[test]
fn strong_directionality_corner() {
    let p = LatticeParams::new(1.0, 0.2, 1.55).unwrap();
    let r = directionality_ratio(&decay_channels(-0.01, Sublattice::B, &p, 0.1).unwrap());
    assert!(r.global_left > 0.95, "{}", r.global_left);
}

#[test]
fn sweep_marks_gaps_as_missing() {
    let p = LatticeParams::new(1.0, 1.0, 0.0).unwrap();
    let deltas = [-10.0, -1.0, 0.5, 10.0];
    let phis = [0.2, 1.0];
    let m = sweep_map(&deltas, &phis, Sublattice::B, &p, 0.1, RatioKind::Global).unwrap();
    assert_eq!(m.values.len(), 2);
    for row in &m.values {
        assert!(row[0].is_none() && row[3].is_none());
        assert!(row[1].is_some());
    }
}
