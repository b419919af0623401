//! Markovian decay channels and left/right emission ratios.

use crate::error::{Result, SawtoothError};
use crate::lattice::{
    band_extrema, bloch_transform, resonant_momenta, Band, BandEdgeSet, Direction, LatticeParams, Sublattice,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Emission into the mode at one resonant momentum, split by the sublattice
/// the photon is found on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub k: f64,
    pub band: Band,
    pub velocity: f64,
    pub direction: Direction,
    pub gamma_a: f64,
    pub gamma_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayChannels {
    pub delta: f64,
    pub sublattice: Sublattice,
    pub channels: Vec<Channel>,
}

impl DecayChannels {
    pub fn total(&self) -> f64 {
        self.channels.iter().map(|c| c.gamma_a + c.gamma_b).sum()
    }
}

pub fn decay_channels(delta: f64, d: Sublattice, p: &LatticeParams, g: f64) -> Result<DecayChannels> {
    decay_channels_in(delta, d, p, g, &band_extrema(p))
}

/// `Gamma^D_alpha(q) = g^2 |P_{D,band}(q)|^2 |P_{alpha,band}(q)|^2 / |v(q)|`,
/// summed over every band that contains `delta`.
pub fn decay_channels_in(
    delta: f64,
    d: Sublattice,
    p: &LatticeParams,
    g: f64,
    edges: &BandEdgeSet,
) -> Result<DecayChannels> {
    if edges.edge_distance(delta) <= 1e-9 * p.scale() {
        return Err(SawtoothError::BandEdge {
            delta,
            divergence_sign: 1.0,
        });
    }
    let bands: Vec<Band> = [Band::Lower, Band::Upper]
        .into_iter()
        .filter(|b| edges.in_band(delta, *b))
        .collect();
    if bands.is_empty() {
        return Err(SawtoothError::NotInBand { delta });
    }
    let mut channels = Vec::new();
    for band in bands {
        for mode in resonant_momenta(delta, band, p)? {
            let bd = bloch_transform(mode.k, p);
            let wd = bd.amplitude(d, band).norm_sqr();
            let scale = g * g * wd / mode.velocity.abs();
            channels.push(Channel {
                k: mode.k,
                band,
                velocity: mode.velocity,
                direction: mode.direction,
                gamma_a: scale * bd.amplitude(Sublattice::A, band).norm_sqr(),
                gamma_b: scale * bd.amplitude(Sublattice::B, band).norm_sqr(),
            });
        }
    }
    Ok(DecayChannels {
        delta,
        sublattice: d,
        channels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalityReport {
    pub delta: f64,
    pub sublattice: Sublattice,
    pub channels: Vec<Channel>,
    pub global_left: f64,
    pub global_right: f64,
    /// Fraction of the photons found on A that travel left.
    pub local_left_a: f64,
    pub local_right_a: f64,
    pub local_left_b: f64,
    pub local_right_b: f64,
    /// All resonant roots travel the same way.
    pub one_sided: bool,
}

pub fn directionality_ratio(ch: &DecayChannels) -> DirectionalityReport {
    let sum = |dir: Option<Direction>, f: &dyn Fn(&Channel) -> f64| -> f64 {
        ch.channels
            .iter()
            .filter(|c| dir.is_none_or(|d| c.direction == d))
            .map(f)
            .sum()
    };
    let both = |c: &Channel| c.gamma_a + c.gamma_b;
    let on_a = |c: &Channel| c.gamma_a;
    let on_b = |c: &Channel| c.gamma_b;
    let ratio = |f: &dyn Fn(&Channel) -> f64| {
        let total = sum(None, f);
        if total > 0.0 {
            sum(Some(Direction::Left), f) / total
        } else {
            f64::NAN
        }
    };
    let has = |d: Direction| ch.channels.iter().any(|c| c.direction == d);
    let one_sided = has(Direction::Left) != has(Direction::Right);
    let gl = ratio(&both);
    let la = ratio(&on_a);
    let lb = ratio(&on_b);
    DirectionalityReport {
        delta: ch.delta,
        sublattice: ch.sublattice,
        channels: ch.channels.clone(),
        global_left: gl,
        global_right: 1.0 - gl,
        local_left_a: la,
        local_right_a: 1.0 - la,
        local_left_b: lb,
        local_right_b: 1.0 - lb,
        one_sided,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioKind {
    Global,
    LocalA,
    LocalB,
}

impl RatioKind {
    pub fn pick(self, r: &DirectionalityReport) -> f64 {
        match self {
            RatioKind::Global => r.global_left,
            RatioKind::LocalA => r.local_left_a,
            RatioKind::LocalB => r.local_left_b,
        }
    }
}

/// Left-going ratio on a (phi, delta) grid; `None` where no resonance exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMap {
    pub deltas: Vec<f64>,
    pub phis: Vec<f64>,
    /// `values[i_phi][i_delta]`
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn sweep_map(
    deltas: &[f64],
    phis: &[f64],
    d: Sublattice,
    p: &LatticeParams,
    g: f64,
    which: RatioKind,
) -> Result<SweepMap> {
    let rows: Result<Vec<Vec<Option<f64>>>> = phis
        .par_iter()
        .map(|&phi| {
            let q = LatticeParams { phi, ..*p }.normalized()?;
            let edges = band_extrema(&q);
            Ok(deltas
                .iter()
                .map(|&delta| {
                    decay_channels_in(delta, d, &q, g, &edges)
                        .ok()
                        .filter(|c| !c.channels.is_empty())
                        .map(|c| which.pick(&directionality_ratio(&c)))
                })
                .collect())
        })
        .collect();
    Ok(SweepMap {
        deltas: deltas.to_vec(),
        phis: phis.to_vec(),
        values: rows?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::spectral_parameters;

    #[test]
    fn channel_total_is_the_decay_rate() {
        let p = LatticeParams::new(1.0, 0.4, 0.8).unwrap();
        for (delta, d) in [(-1.5, Sublattice::A), (-0.3, Sublattice::B), (0.5, Sublattice::B)] {
            let ch = decay_channels(delta, d, &p, 0.1).unwrap();
            let sp = spectral_parameters(delta, d, &p, 0.1).unwrap();
            assert!((ch.total() - sp.decay_rate).abs() < 1e-10 * sp.decay_rate, "{delta}");
        }
    }

    #[test]
    fn cross_channels_coincide() {
        let p = LatticeParams::new(1.0, 0.6, -1.1).unwrap();
        let a = decay_channels(-0.8, Sublattice::A, &p, 0.1).unwrap();
        let b = decay_channels(-0.8, Sublattice::B, &p, 0.1).unwrap();
        for (x, y) in a.channels.iter().zip(&b.channels) {
            assert!((x.gamma_b - y.gamma_a).abs() < 1e-14);
        }
    }

    #[test]
    fn gap_and_edge_inputs_are_rejected() {
        let p = LatticeParams::new(1.0, 1.0, 1.0).unwrap();
        let e = band_extrema(&p);
        let gap = 0.5 * (e.lower_max.energy + e.upper_min.energy);
        assert!(matches!(decay_channels(gap, Sublattice::A, &p, 0.1), Err(SawtoothError::NotInBand { .. })));
        assert!(matches!(
            decay_channels(e.upper_max.energy, Sublattice::A, &p, 0.1),
            Err(SawtoothError::BandEdge { .. })
        ));
    }

    #[test]
    fn zero_flux_is_balanced() {
        let p = LatticeParams::new(1.0, 0.5, 0.0).unwrap();
        let r = directionality_ratio(&decay_channels(-1.0, Sublattice::B, &p, 0.1).unwrap());
        assert!((r.global_left - 0.5).abs() < 1e-12);
        assert!((r.local_left_a - 0.5).abs() < 1e-12);
        assert!((r.local_left_b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_side_is_flagged() {
        let ch = DecayChannels {
            delta: 0.0,
            sublattice: Sublattice::B,
            channels: vec![Channel {
                k: 0.1,
                band: Band::Lower,
                velocity: -0.3,
                direction: Direction::Left,
                gamma_a: 0.2,
                gamma_b: 0.1,
            }],
        };
        let r = directionality_ratio(&ch);
        assert!(r.one_sided);
        assert_eq!(r.global_left, 1.0);
    }
}
