//! Emitter-photon bound states in the band gaps.
//!
//! In a gap `F_D(E) = E - delta - Sigma_D(E)` is real and increasing, so each
//! gap holds at most one root. Coefficients follow from the resolvent,
//! `c_alpha(n) = g c_e <alpha, n | G(E) | D, 0>`.

use crate::error::{Result, SawtoothError, Warning};
use crate::green::{self_energy, LatticeGreen};
use crate::lattice::{band_extrema, wrap_phase, BandEdgeSet, LatticeParams, Sublattice};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapInterval {
    /// -1 below the lower band, 0 between the bands, +1 above the upper band.
    pub m: i8,
    pub lo: f64,
    pub hi: f64,
}

impl GapInterval {
    pub fn contains(&self, e: f64) -> bool {
        e > self.lo && e < self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRegions {
    pub lower: GapInterval,
    pub middle: Option<GapInterval>,
    pub upper: GapInterval,
}

impl GapRegions {
    pub fn iter(&self) -> impl Iterator<Item = GapInterval> {
        [Some(self.lower), self.middle, Some(self.upper)].into_iter().flatten()
    }

    pub fn by_index(&self, m: i8) -> Option<GapInterval> {
        match m {
            -1 => Some(self.lower),
            0 => self.middle,
            1 => Some(self.upper),
            _ => None,
        }
    }

    pub fn locate(&self, e: f64) -> Option<GapInterval> {
        self.iter().find(|g| g.contains(e))
    }
}

pub fn gap_regions(p: &LatticeParams) -> GapRegions {
    gap_regions_from(&band_extrema(p), p)
}

/// Outer intervals are cut `20 max(J_AA, J_AB)` beyond the band edges.
pub fn gap_regions_from(e: &BandEdgeSet, p: &LatticeParams) -> GapRegions {
    let reach = 20.0 * p.j_max();
    GapRegions {
        lower: GapInterval {
            m: -1,
            lo: e.lower_min.energy - reach,
            hi: e.lower_min.energy,
        },
        middle: e.middle_gap_open.then_some(GapInterval {
            m: 0,
            lo: e.lower_max.energy,
            hi: e.upper_min.energy,
        }),
        upper: GapInterval {
            m: 1,
            lo: e.upper_max.energy,
            hi: e.upper_max.energy + reach,
        },
    }
}

fn f_value(e: f64, delta: f64, d: Sublattice, p: &LatticeParams, g: f64) -> Result<f64> {
    Ok(e - delta - self_energy(Complex64::new(e, 0.0), d, p, g)?.re)
}

fn edge_offset(p: &LatticeParams) -> f64 {
    1e-9 * p.j_aa
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateEnergy {
    pub m: i8,
    pub energy: f64,
    pub warning: Option<Warning>,
}

/// Root of `F_D` inside `gap`, or `None` when `F_D` keeps one sign there.
pub fn bound_state_energy(
    gap: &GapInterval,
    delta: f64,
    d: Sublattice,
    p: &LatticeParams,
    g: f64,
) -> Result<Option<BoundStateEnergy>> {
    let eps = edge_offset(p);
    let (mut lo, mut hi) = (gap.lo + eps, gap.hi - eps);
    // outer gaps are unbounded; widen the search if delta lies beyond the cut
    if gap.m == -1 {
        lo = lo.min(delta - 2.0 * g.abs() - p.j_max());
    }
    if gap.m == 1 {
        hi = hi.max(delta + 2.0 * g.abs() + p.j_max());
    }
    let f = |e: f64| f_value(e, delta, d, p, g);
    // a weakly coupled edge mode pushes the root very close to the band
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    for shrink in [1e-2, 1e-4] {
        if flo > 0.0 && gap.m != -1 {
            lo = gap.lo + eps * shrink;
            flo = f(lo)?;
        }
        if fhi < 0.0 && gap.m != 1 {
            hi = gap.hi - eps * shrink;
            fhi = f(hi)?;
        }
    }
    if flo > 0.0 || fhi < 0.0 {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let energy = 0.5 * (lo + hi);
    let edges = [(gap.m != -1).then_some(gap.lo), (gap.m != 1).then_some(gap.hi)];
    let warning = edges
        .into_iter()
        .flatten()
        .find(|edge| (energy - edge).abs() < 1e-10 * p.scale())
        .map(|edge| Warning::EdgePrecision { energy, edge });
    Ok(Some(BoundStateEnergy {
        m: gap.m,
        energy,
        warning,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeLimit {
    pub edge: f64,
    /// Self-energy just inside the gap.
    pub sigma: f64,
    pub divergent: bool,
    /// `F_D` just inside the gap.
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExistenceDecision {
    pub exists: bool,
    pub lower_edge: EdgeLimit,
    pub upper_edge: EdgeLimit,
    /// Condition "delta > 0 with |phi| < pi/2 for B, delta < 0 with |phi| > pi/2 for A".
    pub reading_conditions_swapped: bool,
    /// Condition "always for B; for A delta > 0 if |phi| < pi/2, delta < 0 otherwise".
    pub reading_a_conditional: bool,
}

fn edge_limit(edge: f64, inward: f64, delta: f64, d: Sublattice, p: &LatticeParams, g: f64) -> Result<EdgeLimit> {
    let s = p.scale();
    let near = edge + inward * 1e-10 * s;
    let far = edge + inward * 1e-6 * s;
    let sn = self_energy(Complex64::new(near, 0.0), d, p, g)?.re;
    let sf = self_energy(Complex64::new(far, 0.0), d, p, g)?.re;
    let divergent = sn.abs() > 5.0 * sf.abs() && (sn - sf).abs() > 1e-3 * g * g / s;
    Ok(EdgeLimit {
        edge,
        sigma: sn,
        divergent,
        f: near - delta - sn,
    })
}

/// Middle-gap existence from the signs of `F_D` at the two gap edges.
pub fn bound_state_exists(delta: f64, d: Sublattice, p: &LatticeParams, g: f64) -> Result<ExistenceDecision> {
    let e = band_extrema(p);
    if !e.middle_gap_open {
        return Err(SawtoothError::InvalidParameter("middle gap is closed".into()));
    }
    let lower_edge = edge_limit(e.lower_max.energy, 1.0, delta, d, p, g)?;
    let upper_edge = edge_limit(e.upper_min.energy, -1.0, delta, d, p, g)?;
    let inner = p.phi.abs() < PI / 2.0;
    let swapped = match d {
        Sublattice::B => delta > 0.0 && inner,
        Sublattice::A => delta < 0.0 && !inner,
    };
    let a_conditional = match d {
        Sublattice::B => true,
        Sublattice::A => {
            if inner {
                delta > 0.0
            } else {
                delta < 0.0
            }
        }
    };
    Ok(ExistenceDecision {
        exists: lower_edge.f < 0.0 && upper_edge.f > 0.0,
        lower_edge,
        upper_edge,
        reading_conditions_swapped: swapped,
        reading_a_conditional: a_conditional,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateRecord {
    pub m: i8,
    pub sublattice: Sublattice,
    pub energy: f64,
    pub c_e: Complex64,
    /// Cell offsets from the emitter, `-window..=window`.
    pub cells: Vec<i64>,
    pub c_a: Vec<Complex64>,
    pub c_b: Vec<Complex64>,
    pub xi: f64,
    pub site_phase: f64,
    /// `1 / (1 - Sigma'(E))`, an independent value of `|c_e|^2`.
    pub c_e_sq_from_derivative: f64,
    pub warnings: Vec<Warning>,
}

impl BoundStateRecord {
    pub fn window(&self) -> usize {
        (self.cells.len() - 1) / 2
    }

    pub fn coefficients(&self, s: Sublattice) -> &[Complex64] {
        match s {
            Sublattice::A => &self.c_a,
            Sublattice::B => &self.c_b,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_e.norm_sqr()
            + self
                .c_a
                .iter()
                .chain(&self.c_b)
                .map(|c| c.norm_sqr())
                .sum::<f64>()
    }

    /// `|sum_n c_alpha(n) e^{-ikn}|^2` over the stored window.
    pub fn momentum_density(&self, s: Sublattice, k: f64) -> f64 {
        self.cells
            .iter()
            .zip(self.coefficients(s))
            .map(|(&n, c)| c * Complex64::from_polar(1.0, -k * n as f64))
            .sum::<Complex64>()
            .norm_sqr()
    }
}

const MAX_WINDOW: usize = 200_000;

fn unnormalized(lg: &LatticeGreen, d: Sublattice, window: usize) -> (Vec<i64>, Vec<Complex64>, Vec<Complex64>) {
    let w = window as i64;
    let cells: Vec<i64> = (-w..=w).collect();
    let a = cells.iter().map(|&n| lg.element(Sublattice::A, d, n)).collect();
    let b = cells.iter().map(|&n| lg.element(Sublattice::B, d, n)).collect();
    (cells, a, b)
}

/// Builds the state at `energy`; `window = None` sizes it to 30 localization lengths.
pub fn bound_state_wavefunction(
    energy: f64,
    d: Sublattice,
    p: &LatticeParams,
    g: f64,
    window: Option<usize>,
) -> Result<BoundStateRecord> {
    let edges = band_extrema(p);
    if edges.in_any_band(energy) || edges.edge_distance(energy) <= 1e-12 * p.scale() {
        return Err(SawtoothError::InvalidParameter(format!("energy {energy} is not inside a gap")));
    }
    let gaps = gap_regions_from(&edges, p);
    let m = if energy < edges.lower_min.energy {
        -1
    } else if energy > edges.upper_max.energy {
        1
    } else {
        gaps.middle.map(|g| g.m).unwrap_or(0)
    };
    let lg = LatticeGreen::new(Complex64::new(energy, 0.0), p)?;
    let mut warnings = Vec::new();

    let mut w = window.unwrap_or(20).max(2);
    let (mut cells, mut ga, mut gb);
    loop {
        (cells, ga, gb) = unnormalized(&lg, d, w);
        if window.is_some() {
            break;
        }
        let xi = tail_length(&cells, &ga, &gb).unwrap_or(1.0);
        let want = ((30.0 * xi).ceil() as usize).clamp(20, MAX_WINDOW);
        if want <= w {
            break;
        }
        w = want;
    }
    let xi = tail_length(&cells, &ga, &gb)?;
    if (w as f64) < 10.0 * xi {
        warnings.push(Warning::Truncation { window: w, xi });
    }

    let photon: f64 = ga.iter().chain(&gb).map(|c| c.norm_sqr()).sum();
    let c_e = 1.0 / (1.0 + g * g * photon).sqrt();
    let scale = g * c_e;
    let c_a: Vec<Complex64> = ga.iter().map(|c| c * scale).collect();
    let c_b: Vec<Complex64> = gb.iter().map(|c| c * scale).collect();

    let h = 1e-6 * p.scale().min(edges.edge_distance(energy) * 0.1);
    let sp = self_energy(Complex64::new(energy + h, 0.0), d, p, g)?.re;
    let sm = self_energy(Complex64::new(energy - h, 0.0), d, p, g)?.re;
    let deriv = (sp - sm) / (2.0 * h);

    let mut rec = BoundStateRecord {
        m,
        sublattice: d,
        energy,
        c_e: Complex64::new(c_e, 0.0),
        cells,
        c_a,
        c_b,
        xi,
        site_phase: 0.0,
        c_e_sq_from_derivative: 1.0 / (1.0 - deriv),
        warnings,
    };
    rec.site_phase = bs_phase(&rec);
    Ok(rec)
}

/// Least-squares `(slope, rms residual)` of `ln v_i` against `i`.
pub fn fit_log_slope(values: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| (i as f64, v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(SawtoothError::FitQuality { residual: f64::INFINITY });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let res = (pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, res))
}

/// Cells `n >= 2` whose amplitude is still above `1e-12` of the peak.
fn tail_profile(cells: &[i64], a: &[Complex64], b: &[Complex64]) -> Vec<f64> {
    let mag: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x.norm_sqr() + y.norm_sqr()).sqrt()).collect();
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    cells
        .iter()
        .zip(&mag)
        .filter(|(n, _)| **n >= 2)
        .map(|(_, m)| *m)
        .take_while(|m| *m > 1e-12 * peak)
        .collect()
}

fn tail_length(cells: &[i64], a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    let tail = tail_profile(cells, a, b);
    let (slope, res) = fit_log_slope(&tail)?;
    if res > 0.1 {
        return Err(SawtoothError::FitQuality { residual: res });
    }
    if slope >= 0.0 {
        return Err(SawtoothError::FitQuality { residual: f64::INFINITY });
    }
    Ok(-1.0 / slope)
}

/// Decay length in cells from the right-hand tail.
pub fn localization_length(rec: &BoundStateRecord) -> Result<f64> {
    tail_length(&rec.cells, &rec.c_a, &rec.c_b)
}

/// Circular mean of `arg(c(n+1)/c(n))` along the right-hand tail of the
/// emitter's own sublattice.
pub fn bs_phase(rec: &BoundStateRecord) -> f64 {
    let c = rec.coefficients(rec.sublattice);
    let peak = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let floor = 1e-12f64.max(1e-12 * peak);
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, n) in rec.cells.iter().enumerate() {
        if *n < 1 || i + 1 >= c.len() {
            continue;
        }
        if c[i].norm() < floor || c[i + 1].norm() < floor {
            continue;
        }
        let r = c[i + 1] / c[i];
        acc += r / r.norm();
    }
    wrap_phase(acc.arg())
}
