//! Momentum-space picture of the sawtooth bath.
//!
//! Cell `n` holds one A resonator (`a_n`) and one B resonator (`b_n`). The
//! bonds are `-J_AA` between neighbouring A sites, `-J_AB` inside a cell and
//! `-J_AB e^{-i phi}` on the `a_{n+1}^dag b_n` link. With `a_k = sum_n e^{-ikn} a_n / sqrt(N)`
//! the Bloch matrix reads
//!
//! ```text
//! h(k) = [[w_B - 2 J_AA cos k, f(k)], [f(k)^*, w_B]],   f(k) = -J_AB (1 + e^{-i(k+phi)})
//! ```

use crate::error::{Result, SawtoothError};
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

impl Sublattice {
    pub fn index(self) -> usize {
        match self {
            Sublattice::A => 0,
            Sublattice::B => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    Upper,
    Lower,
}

impl Band {
    pub fn index(self) -> usize {
        match self {
            Band::Upper => 0,
            Band::Lower => 1,
        }
    }
}

/// Propagation direction of a resonant mode, from the sign of its group velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Min,
    Max,
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn default_cells() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeParams {
    #[serde(rename = "J_AA")]
    pub j_aa: f64,
    #[serde(rename = "J_AB")]
    pub j_ab: f64,
    pub phi: f64,
    #[serde(rename = "omega_B", default)]
    pub omega_b: f64,
    /// Cells per sublattice; only finite-lattice operations read it.
    #[serde(rename = "N", default = "default_cells")]
    pub n_cells: usize,
}

impl LatticeParams {
    pub fn new(j_aa: f64, j_ab: f64, phi: f64) -> Result<Self> {
        LatticeParams {
            j_aa,
            j_ab,
            phi,
            omega_b: 0.0,
            n_cells: default_cells(),
        }
        .normalized()
    }

    pub fn with_omega_b(mut self, omega_b: f64) -> Self {
        self.omega_b = omega_b;
        self
    }

    pub fn with_cells(mut self, n_cells: usize) -> Self {
        self.n_cells = n_cells;
        self
    }

    /// Checks the physical constraints and folds `phi` into (-pi, pi].
    pub fn normalized(mut self) -> Result<Self> {
        if !(self.j_aa.is_finite() && self.j_aa > 0.0) {
            return Err(SawtoothError::InvalidParameter(format!(
                "J_AA must be positive, got {}",
                self.j_aa
            )));
        }
        if !(self.j_ab.is_finite() && self.j_ab >= 0.0) {
            return Err(SawtoothError::InvalidParameter(format!(
                "J_AB must be non-negative, got {}",
                self.j_ab
            )));
        }
        if !self.phi.is_finite() || !self.omega_b.is_finite() {
            return Err(SawtoothError::InvalidParameter(
                "phi and omega_B must be finite".into(),
            ));
        }
        self.phi = wrap_phase(self.phi);
        Ok(self)
    }

    pub fn validate_finite(&self) -> Result<()> {
        if self.n_cells < 2 {
            return Err(SawtoothError::InvalidParameter(format!(
                "finite lattice needs N >= 2, got {}",
                self.n_cells
            )));
        }
        Ok(())
    }

    pub fn f(&self, k: f64) -> Complex64 {
        -self.j_ab * (1.0 + Complex64::from_polar(1.0, -(k + self.phi)))
    }

    /// |f(k)|^2 written without cancellation.
    pub fn f_norm_sqr(&self, k: f64) -> f64 {
        let c = ((k + self.phi) / 2.0).cos();
        4.0 * self.j_ab * self.j_ab * c * c
    }

    pub fn j_max(&self) -> f64 {
        self.j_aa.max(self.j_ab)
    }

    /// Energy scale used to make tolerances relative.
    pub fn scale(&self) -> f64 {
        self.j_aa + self.j_ab
    }
}

pub fn bloch_hamiltonian(k: f64, p: &LatticeParams) -> Matrix2<Complex64> {
    let f = p.f(k);
    Matrix2::new(
        Complex64::new(p.omega_b - 2.0 * p.j_aa * k.cos(), 0.0),
        f,
        f.conj(),
        Complex64::new(p.omega_b, 0.0),
    )
}

/// Half splitting between the two bands at `k`.
fn half_gap(k: f64, p: &LatticeParams) -> f64 {
    (p.j_aa * k.cos()).hypot(p.f_norm_sqr(k).sqrt())
}

/// `(omega_u, omega_l)` at `k`.
pub fn band_energies(k: f64, p: &LatticeParams) -> (f64, f64) {
    let mid = p.omega_b - p.j_aa * k.cos();
    let s = half_gap(k, p);
    (mid + s, mid - s)
}

pub fn band_energy(k: f64, band: Band, p: &LatticeParams) -> f64 {
    let (u, l) = band_energies(k, p);
    match band {
        Band::Upper => u,
        Band::Lower => l,
    }
}

/// Eigenpairs of `[[a, c], [c^*, b]]`, larger eigenvalue first.
pub(crate) fn hermitian2(a: f64, b: f64, c: Complex64) -> [(f64, [Complex64; 2]); 2] {
    let m = 0.5 * (a + b);
    let r = (0.5 * (a - b)).hypot(c.norm());
    let mut out = [(0.0, [Complex64::new(0.0, 0.0); 2]); 2];
    for (slot, lam) in [m + r, m - r].into_iter().enumerate() {
        let v1 = [c, Complex64::new(lam - a, 0.0)];
        let v2 = [Complex64::new(lam - b, 0.0), c.conj()];
        let n1 = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
        let n2 = (v2[0].norm_sqr() + v2[1].norm_sqr()).sqrt();
        let v = if n1 == 0.0 && n2 == 0.0 {
            // matrix proportional to the identity
            if slot == 0 {
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
            } else {
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
            }
        } else if n1 >= n2 {
            [v1[0] / n1, v1[1] / n1]
        } else {
            [v2[0] / n2, v2[1] / n2]
        };
        out[slot] = (lam, v);
    }
    out
}

/// Rotates the global phase so the B entry is real with the requested sign
/// (or, when it vanishes, the A entry real and positive).
fn fix_gauge(v: [Complex64; 2], sign: f64) -> [Complex64; 2] {
    let nb = v[1].norm();
    let rot = if nb > 0.0 {
        sign * v[1].conj() / nb
    } else {
        let na = v[0].norm();
        if na > 0.0 {
            v[0].conj() / na
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    [v[0] * rot, v[1] * rot]
}

/// Per-k eigen-decomposition of the Bloch matrix.
///
/// Columns of `p` are `(u, l)`; rows are `(a, b)`. Away from degeneracies
/// column `alpha` equals `N_alpha (f, omega_alpha - w_B + 2 J_AA cos k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochData {
    pub k: f64,
    pub omega_u: f64,
    pub omega_l: f64,
    pub f: Complex64,
    pub theta: f64,
    pub varphi: f64,
    pub p: [[Complex64; 2]; 2],
    pub n_u: f64,
    pub n_l: f64,
    /// Set at band touchings, where the columns are the k -> k^- limits.
    pub degenerate: bool,
}

impl BlochData {
    pub fn amplitude(&self, s: Sublattice, band: Band) -> Complex64 {
        self.p[s.index()][band.index()]
    }

    pub fn energy(&self, band: Band) -> f64 {
        match band {
            Band::Upper => self.omega_u,
            Band::Lower => self.omega_l,
        }
    }
}

pub fn bloch_transform(k: f64, p: &LatticeParams) -> BlochData {
    let c = k.cos();
    let f = p.f(k);
    let d = -2.0 * p.j_aa * c;
    let s = half_gap(k, p);
    let degenerate = s <= 1e-12 * p.scale();

    let cols = if !degenerate {
        let [(_, vu), (_, vl)] = hermitian2(d, 0.0, f);
        [fix_gauge(vu, 1.0), fix_gauge(vl, -1.0)]
    } else {
        // First-order splitting is governed by h'(k); for k slightly below the
        // touching point the upper band follows the smaller eigenvalue of h'.
        let fp = Complex64::i() * p.j_ab * Complex64::from_polar(1.0, -(k + p.phi));
        let [(_, v_hi), (_, v_lo)] = hermitian2(2.0 * p.j_aa * k.sin(), 0.0, fp);
        [fix_gauge(v_lo, 1.0), fix_gauge(v_hi, -1.0)]
    };

    let (omega_u, omega_l) = band_energies(k, p);
    let norm = |w: f64| {
        let den = f.norm_sqr() + (w - p.omega_b - d).powi(2);
        if den > 0.0 {
            1.0 / den.sqrt()
        } else {
            f64::INFINITY
        }
    };
    let pm = [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]];
    BlochData {
        k,
        omega_u,
        omega_l,
        f,
        theta: pm[0][1].norm().atan2(pm[0][0].norm()),
        varphi: if f.norm() > 0.0 { f.arg() } else { 0.0 },
        p: pm,
        n_u: norm(omega_u),
        n_l: norm(omega_l),
        degenerate,
    }
}

/// Analytic `d omega / dk`.
pub fn group_velocity(k: f64, band: Band, p: &LatticeParams) -> Result<f64> {
    let s = half_gap(k, p);
    if s <= 1e-12 * p.scale() {
        return Err(SawtoothError::DegenerateDispersion { k });
    }
    Ok(slope_unchecked(k, band, p, s))
}

fn slope_unchecked(k: f64, band: Band, p: &LatticeParams, s: f64) -> f64 {
    let ds2 = -p.j_aa * p.j_aa * (2.0 * k).sin() - 2.0 * p.j_ab * p.j_ab * (k + p.phi).sin();
    let sign = match band {
        Band::Upper => 1.0,
        Band::Lower => -1.0,
    };
    p.j_aa * k.sin() + sign * ds2 / (2.0 * s)
}

/// Slope that reads zero on a touching point instead of failing.
fn slope(k: f64, band: Band, p: &LatticeParams) -> f64 {
    let s = half_gap(k, p);
    if s <= 1e-13 * p.scale() {
        0.0
    } else {
        slope_unchecked(k, band, p, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEdge {
    pub energy: f64,
    pub momentum: f64,
    pub band: Band,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEdgeSet {
    pub lower_min: BandEdge,
    pub lower_max: BandEdge,
    pub upper_min: BandEdge,
    pub upper_max: BandEdge,
    pub middle_gap_open: bool,
}

impl BandEdgeSet {
    pub fn edges(&self) -> [BandEdge; 4] {
        [self.lower_min, self.lower_max, self.upper_min, self.upper_max]
    }

    /// `(min, max)` energies of a band.
    pub fn range(&self, band: Band) -> (f64, f64) {
        match band {
            Band::Lower => (self.lower_min.energy, self.lower_max.energy),
            Band::Upper => (self.upper_min.energy, self.upper_max.energy),
        }
    }

    pub fn in_band(&self, e: f64, band: Band) -> bool {
        let (lo, hi) = self.range(band);
        e > lo && e < hi
    }

    pub fn in_any_band(&self, e: f64) -> bool {
        self.in_band(e, Band::Lower) || self.in_band(e, Band::Upper)
    }

    /// Distance from `e` to the closest edge.
    pub fn edge_distance(&self, e: f64) -> f64 {
        self.edges()
            .iter()
            .map(|x| (x.energy - e).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Bisection on the slope inside `[k0 - h, k0 + h]`.
fn refine_extremum(k0: f64, h: f64, band: Band, kind: EdgeKind, p: &LatticeParams) -> f64 {
    let sgn = match kind {
        EdgeKind::Min => 1.0,
        EdgeKind::Max => -1.0,
    };
    let d = |k: f64| sgn * slope(k, band, p);
    let (mut lo, mut hi) = (k0 - h, k0 + h);
    if !(d(lo) < 0.0 && d(hi) > 0.0) {
        return k0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let dm = d(mid);
        if dm == 0.0 {
            return mid;
        }
        if dm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let better = match kind {
        EdgeKind::Min => band_energy(k, band, p) <= band_energy(k0, band, p),
        EdgeKind::Max => band_energy(k, band, p) >= band_energy(k0, band, p),
    };
    if better {
        k
    } else {
        k0
    }
}

pub fn band_extrema(p: &LatticeParams) -> BandEdgeSet {
    band_extrema_with(p, 100_000)
}

/// Grid scan with `n_grid` points followed by slope bisection.
pub fn band_extrema_with(p: &LatticeParams, n_grid: usize) -> BandEdgeSet {
    let h = 2.0 * PI / n_grid as f64;
    let edge = |band: Band, kind: EdgeKind| {
        let mut best_k = -PI;
        let mut best_e = band_energy(-PI, band, p);
        for i in 1..n_grid {
            let k = -PI + h * i as f64;
            let e = band_energy(k, band, p);
            let better = match kind {
                EdgeKind::Min => e < best_e,
                EdgeKind::Max => e > best_e,
            };
            if better {
                best_k = k;
                best_e = e;
            }
        }
        let k = wrap_phase(refine_extremum(best_k, h, band, kind, p));
        BandEdge {
            energy: band_energy(k, band, p),
            momentum: k,
            band,
            kind,
        }
    };
    let lower_min = edge(Band::Lower, EdgeKind::Min);
    let lower_max = edge(Band::Lower, EdgeKind::Max);
    let upper_min = edge(Band::Upper, EdgeKind::Min);
    let upper_max = edge(Band::Upper, EdgeKind::Max);
    BandEdgeSet {
        middle_gap_open: upper_min.energy - lower_max.energy > 1e-9 * p.scale(),
        lower_min,
        lower_max,
        upper_min,
        upper_max,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonantMode {
    pub k: f64,
    pub band: Band,
    pub velocity: f64,
    pub direction: Direction,
}

pub fn resonant_momenta(delta: f64, band: Band, p: &LatticeParams) -> Result<Vec<ResonantMode>> {
    resonant_momenta_with(delta, band, p, 10_000)
}

/// Sign-change bracketing on `n_grid` cells. Cells holding a local extremum
/// are split there first so that two roots sharing a cell are not lost.
pub fn resonant_momenta_with(
    delta: f64,
    band: Band,
    p: &LatticeParams,
    n_grid: usize,
) -> Result<Vec<ResonantMode>> {
    let tol = 1e-10 * p.scale();
    let g = |k: f64| band_energy(k, band, p) - delta;
    let h = 2.0 * PI / n_grid as f64;
    let mut roots: Vec<f64> = Vec::new();

    for i in 0..n_grid {
        let k0 = -PI + h * i as f64;
        let k1 = if i + 1 == n_grid { PI } else { k0 + h };
        let mut pts = vec![k0];
        let (s0, s1) = (slope(k0, band, p), slope(k1, band, p));
        if s0 * s1 < 0.0 {
            let kind = if s0 < 0.0 { EdgeKind::Min } else { EdgeKind::Max };
            let ke = refine_extremum(0.5 * (k0 + k1), 0.5 * (k1 - k0), band, kind, p);
            if ke > k0 && ke < k1 {
                if g(ke).abs() <= tol {
                    return Err(SawtoothError::Tangency { delta, k: ke });
                }
                pts.push(ke);
            }
        }
        pts.push(k1);
        for w in pts.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            let (glo, ghi) = (g(lo), g(hi));
            if glo == 0.0 {
                roots.push(lo);
                continue;
            }
            if glo * ghi >= 0.0 {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let gm = g(mid);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (gm < 0.0) == (glo < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }

    let mut modes = Vec::with_capacity(roots.len());
    for k in roots {
        let k = wrap_phase(k);
        if modes.iter().any(|m: &ResonantMode| (m.k - k).abs() < 1e-12) {
            continue;
        }
        let v = group_velocity(k, band, p)?;
        if v.abs() < 1e-9 * p.scale() {
            return Err(SawtoothError::Tangency { delta, k });
        }
        modes.push(ResonantMode {
            k,
            band,
            velocity: v,
            direction: if v > 0.0 { Direction::Right } else { Direction::Left },
        });
    }
    modes.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(modes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCoupling {
    pub upper: f64,
    pub lower: f64,
    pub degenerate: bool,
}

impl BandCoupling {
    pub fn get(&self, band: Band) -> f64 {
        match band {
            Band::Upper => self.upper,
            Band::Lower => self.lower,
        }
    }
}

/// Weight of a localized emitter on sublattice `d` in each Bloch band.
pub fn band_coupling(k: f64, d: Sublattice, p: &LatticeParams) -> BandCoupling {
    let bd = bloch_transform(k, p);
    BandCoupling {
        upper: bd.amplitude(d, Band::Upper).norm_sqr(),
        lower: bd.amplitude(d, Band::Lower).norm_sqr(),
        degenerate: bd.degenerate,
    }
}

/// Smooth relabeling of the two bands through the touching point at |phi| = pi/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rebanded {
    params: LatticeParams,
    k_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RebandedPoint {
    pub k: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub g_plus_a: f64,
    pub g_minus_a: f64,
    pub g_plus_b: f64,
    pub g_minus_b: f64,
}

pub fn reband_crossing(p: &LatticeParams) -> Result<Rebanded> {
    if (p.phi.abs() - PI / 2.0).abs() > 1e-9 {
        return Err(SawtoothError::NotAtCrossing { phi: p.phi });
    }
    Ok(Rebanded {
        params: *p,
        k_c: wrap_phase(PI - p.phi),
    })
}

impl Rebanded {
    pub fn crossing_momentum(&self) -> f64 {
        self.k_c
    }

    pub fn at(&self, k: f64) -> RebandedPoint {
        let k = wrap_phase(k);
        let bd = bloch_transform(k, &self.params);
        let ga = [
            bd.amplitude(Sublattice::A, Band::Upper).norm_sqr(),
            bd.amplitude(Sublattice::A, Band::Lower).norm_sqr(),
        ];
        let gb = [
            bd.amplitude(Sublattice::B, Band::Upper).norm_sqr(),
            bd.amplitude(Sublattice::B, Band::Lower).norm_sqr(),
        ];
        let (ip, im) = if k <= self.k_c { (0, 1) } else { (1, 0) };
        let w = [bd.omega_u, bd.omega_l];
        RebandedPoint {
            k,
            omega_plus: w[ip],
            omega_minus: w[im],
            g_plus_a: ga[ip],
            g_minus_a: ga[im],
            g_plus_b: gb[ip],
            g_minus_b: gb[im],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(j_ab: f64, phi: f64) -> LatticeParams {
        LatticeParams::new(1.0, j_ab, phi).unwrap()
    }

    #[test]
    fn hamiltonian_at_origin() {
        let h = bloch_hamiltonian(0.0, &params(1.0, 0.0));
        let want = [[-2.0, -2.0], [-2.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(h[(i, j)].re, want[i][j], epsilon = 1e-15);
                assert_abs_diff_eq!(h[(i, j)].im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn destructive_interference_at_zone_edge() {
        let h = bloch_hamiltonian(PI, &params(1.0, 0.0));
        assert_abs_diff_eq!(h[(0, 0)].re, 2.0, epsilon = 1e-15);
        assert!(h[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn decoupled_and_touching_bands() {
        let (u, l) = band_energies(0.0, &params(0.0, 0.3));
        assert_abs_diff_eq!(u, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l, -2.0, epsilon = 1e-15);
        for j in [0.3, 1.0, 2.5] {
            let (u, l) = band_energies(PI / 2.0, &LatticeParams::new(j, 0.7, PI / 2.0).unwrap());
            assert!(u.abs() < 1e-15 && l.abs() < 1e-15);
        }
        let (u, l) = band_energies(0.0, &params(1.0, 0.0));
        assert_abs_diff_eq!(u, -1.0 + 5f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(l, -1.0 - 5f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn phase_wrapping() {
        assert_abs_diff_eq!(wrap_phase(-PI), PI);
        assert_abs_diff_eq!(wrap_phase(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_phase(0.25), 0.25);
        assert!(LatticeParams::new(0.0, 1.0, 0.0).is_err());
        assert!(LatticeParams::new(1.0, -0.1, 0.0).is_err());
        assert!(LatticeParams::new(1.0, 0.1, f64::NAN).is_err());
    }

    #[test]
    fn transform_columns_follow_f() {
        let p = params(0.6, 0.9);
        for &k in &[-2.5, -0.3, 0.4, 1.9, 3.0] {
            let bd = bloch_transform(k, &p);
            let ph = bd.f / bd.f.norm();
            let au = bd.amplitude(Sublattice::A, Band::Upper);
            let al = bd.amplitude(Sublattice::A, Band::Lower);
            assert!((au / au.norm() - ph).norm() < 1e-12);
            assert!((al / al.norm() - ph).norm() < 1e-12);
            assert_abs_diff_eq!(bd.theta.cos(), au.norm(), epsilon = 1e-12);
            assert_abs_diff_eq!(au.norm(), bd.n_u * bd.f.norm(), epsilon = 1e-12);
            assert!(!bd.degenerate);
        }
    }

    #[test]
    fn touching_point_uses_left_limit() {
        let p = params(0.8, PI / 2.0);
        let bd = bloch_transform(PI / 2.0, &p);
        assert!(bd.degenerate);
        let near = bloch_transform(PI / 2.0 - 1e-7, &p);
        for r in 0..2 {
            for c in 0..2 {
                assert!((bd.p[r][c].norm() - near.p[r][c].norm()).abs() < 1e-6);
            }
        }
        assert!(matches!(
            group_velocity(PI / 2.0, Band::Lower, &p),
            Err(SawtoothError::DegenerateDispersion { .. })
        ));
    }

    #[test]
    fn velocity_vanishes_at_extrema() {
        let p = params(0.5, 0.7);
        let e = band_extrema(&p);
        for edge in e.edges() {
            let v = group_velocity(edge.momentum, edge.band, &p).unwrap();
            assert!(v.abs() < 1e-10, "{edge:?} v={v}");
        }
    }

    #[test]
    fn extrema_reference_values() {
        let e = band_extrema(&params(1.0, 0.0));
        assert_abs_diff_eq!(e.lower_min.energy, -1.0 - 5f64.sqrt(), epsilon = 1e-12);
        assert!(e.lower_min.momentum.abs() < 1e-6);
        assert!(!band_extrema(&params(1.0, PI / 2.0)).middle_gap_open);
        assert!(!band_extrema(&params(0.3, -PI / 2.0)).middle_gap_open);
        assert!(band_extrema(&params(1.0, PI / 3.0)).middle_gap_open);
    }

    #[test]
    fn resonances_outside_band_are_empty() {
        let p = params(0.2, 1.5);
        let e = band_extrema(&p);
        let r = resonant_momenta(e.lower_min.energy - 0.1, Band::Lower, &p).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn zero_flux_roots_are_mirrored() {
        let p = params(0.7, 0.0);
        let e = band_extrema(&p);
        let mid = 0.5 * (e.lower_min.energy + e.lower_max.energy);
        let r = resonant_momenta(mid, Band::Lower, &p).unwrap();
        assert_eq!(r.len(), 2);
        assert_abs_diff_eq!(r[0].k, -r[1].k, epsilon = 1e-12);
        assert_ne!(r[0].direction, r[1].direction);
    }

    #[test]
    fn edge_detuning_is_tangent() {
        let p = params(0.5, 0.7);
        let e = band_extrema(&p);
        let r = resonant_momenta(e.lower_min.energy, Band::Lower, &p);
        assert!(matches!(r, Err(SawtoothError::Tangency { .. })));
    }

    #[test]
    fn decoupled_b_sits_on_flat_band() {
        let p = params(0.0, 0.4);
        for &k in &[-2.0, -0.5, 0.1, 1.0] {
            let g = band_coupling(k, Sublattice::B, &p);
            let flat = if band_energies(k, &p).0.abs() < 1e-14 { g.upper } else { g.lower };
            assert_abs_diff_eq!(flat, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rebanding_rejects_open_gap() {
        assert!(reband_crossing(&params(1.0, 1.0)).is_err());
        assert!(reband_crossing(&params(1.0, -PI / 2.0)).is_ok());
    }

    #[test]
    fn rebanded_bands_are_smooth() {
        let p = params(0.6, PI / 2.0);
        let rb = reband_crossing(&p).unwrap();
        let kc = rb.crossing_momentum();
        assert_abs_diff_eq!(kc, PI / 2.0, epsilon = 1e-15);
        let h = 1e-8;
        let (l, c, r) = (rb.at(kc - h), rb.at(kc), rb.at(kc + h));
        for get in [|x: &RebandedPoint| x.omega_plus, |x: &RebandedPoint| x.omega_minus] {
            let left = (get(&c) - get(&l)) / h;
            let right = (get(&r) - get(&c)) / h;
            assert!((left - right).abs() < 1e-6, "slope jump {}", left - right);
        }
        let (l, r) = (rb.at(kc - 1e-9), rb.at(kc + 1e-9));
        assert!((l.g_plus_a - r.g_plus_a).abs() < 1e-6);
        assert!((l.g_minus_b - r.g_minus_b).abs() < 1e-6);
    }
}
