//! Resolvent of the bath and the emitter self-energies built from it.
//!
//! Every lattice Green function reduces to the integrals
//! `K_e(z) = (1/2pi) int dk e^{ike} / det(z - h(k))`. With `y = e^{ik}`,
//! `y det = Q(y) = a y^2 + b y + c` and `K_e` is a sum of residues of
//! `y^e / Q(y)`: the poles inside the unit circle for `e >= 0`, minus the
//! poles outside for `e < 0` (the residue at infinity vanishes there).
//!
//! On the real axis inside a band both poles sit on the unit circle. The
//! `z -> z + i0^+` limit is taken exactly by following each pole with `dy/dz`.

use crate::error::{Result, SawtoothError};
use crate::lattice::{band_energies, band_extrema, bloch_transform, BandEdgeSet, LatticeParams, Sublattice};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ON_CIRCLE: f64 = 1e-8;
const NEAR_DEGENERATE: f64 = 1e-10;
const FALLBACK_POINTS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResiduePoles {
    pub y_plus: Complex64,
    pub y_minus: Complex64,
    pub y_min: Complex64,
    pub y_max: Complex64,
}

/// Coefficients `(a, b, c)` of `Q(y)`.
pub fn pole_quadratic(z: Complex64, p: &LatticeParams) -> (Complex64, Complex64, Complex64) {
    let zp = z - p.omega_b;
    let t2 = p.j_ab * p.j_ab;
    let e = Complex64::from_polar(1.0, p.phi);
    let a = zp * p.j_aa - t2 * e;
    let b = zp * zp - 2.0 * t2;
    let c = zp * p.j_aa - t2 * e.conj();
    (a, b, c)
}

pub fn pole_locations(z: Complex64, p: &LatticeParams) -> Result<ResiduePoles> {
    let (a, b, c) = pole_quadratic(z, p);
    let zp = z - p.omega_b;
    if a.norm() <= 1e-13 * (zp.norm() * p.j_aa + p.j_ab * p.j_ab) {
        return Err(SawtoothError::DegeneratePoles { re: z.re, im: z.im });
    }
    let sq = (b * b - 4.0 * a * c).sqrt();
    let naive_plus = (-b + sq) / (2.0 * a);
    // cancellation-free pair
    let s = if (b.conj() * sq).re >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + s * sq);
    let (r1, r2) = if q.norm() == 0.0 {
        let r = -b / (2.0 * a);
        (r, r)
    } else {
        (q / a, c / q)
    };
    let (y_plus, y_minus) = if (r1 - naive_plus).norm() <= (r2 - naive_plus).norm() {
        (r1, r2)
    } else {
        (r2, r1)
    };
    let (y_min, y_max) = if y_plus.norm() <= y_minus.norm() {
        (y_plus, y_minus)
    } else {
        (y_minus, y_plus)
    };
    Ok(ResiduePoles {
        y_plus,
        y_minus,
        y_min,
        y_max,
    })
}

/// Resolvent matrix elements of the infinite bath at one complex energy.
#[derive(Debug, Clone)]
pub struct LatticeGreen {
    z: Complex64,
    params: LatticeParams,
    roots: [Complex64; 2],
    inside: [bool; 2],
    lead: Complex64,
    fallback: bool,
}

impl LatticeGreen {
    /// Real `z` is read as `z + i0^+`.
    pub fn new(z: Complex64, p: &LatticeParams) -> Result<Self> {
        let poles = pole_locations(z, p)?;
        let (a, _, _) = pole_quadratic(z, p);
        let roots = [poles.y_plus, poles.y_minus];
        let fallback = (roots[0] - roots[1]).norm() < NEAR_DEGENERATE;
        let zp = z - p.omega_b;
        let on_circle = z.im == 0.0 && roots.iter().all(|y| (y.norm() - 1.0).abs() < ON_CIRCLE);
        let inside = if on_circle {
            let b = zp * zp - 2.0 * p.j_ab * p.j_ab;
            roots.map(|y| {
                let dq_dz = p.j_aa * y * y + 2.0 * zp * y + p.j_aa;
                let dq_dy = 2.0 * a * y + b;
                let dy_dz = -dq_dz / dq_dy;
                (y.conj() * dy_dz).im > 0.0
            })
        } else {
            roots.map(|y| y.norm() < 1.0)
        };
        Ok(LatticeGreen {
            z,
            params: *p,
            roots,
            inside,
            lead: a,
            fallback,
        })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// `(1/2pi) int dk e^{ike} / det(z - h(k))`.
    pub fn k_integral(&self, e: i64) -> Complex64 {
        if self.fallback {
            return self.k_integral_sum(e);
        }
        let [y1, y2] = self.roots;
        let res = [
            1.0 / (self.lead * (y1 - y2)),
            1.0 / (self.lead * (y2 - y1)),
        ];
        let mut acc = Complex64::new(0.0, 0.0);
        for ((y, r), inside) in self.roots.iter().zip(res).zip(self.inside) {
            if e >= 0 && inside {
                acc += y.powi(e as i32) * r;
            } else if e < 0 && !inside {
                acc -= y.powi(e as i32) * r;
            }
        }
        acc
    }

    fn k_integral_sum(&self, e: i64) -> Complex64 {
        let p = &self.params;
        let zp = self.z - p.omega_b;
        let n = FALLBACK_POINTS;
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..n {
            let k = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * m as f64 / n as f64;
            let det = zp * zp + 2.0 * zp * p.j_aa * k.cos() - p.f_norm_sqr(k);
            acc += Complex64::from_polar(1.0, k * e as f64) / det;
        }
        acc / n as f64
    }

    /// `<to, r | G(z) | from, 0>`.
    pub fn element(&self, to: Sublattice, from: Sublattice, r: i64) -> Complex64 {
        let p = &self.params;
        let zp = self.z - p.omega_b;
        let k = |e: i64| self.k_integral(e);
        match (to, from) {
            (Sublattice::A, Sublattice::A) => zp * k(r),
            (Sublattice::B, Sublattice::B) => zp * k(r) + p.j_aa * (k(r + 1) + k(r - 1)),
            (Sublattice::B, Sublattice::A) => {
                -p.j_ab * (k(r) + Complex64::from_polar(1.0, p.phi) * k(r + 1))
            }
            (Sublattice::A, Sublattice::B) => {
                -p.j_ab * (k(r) + Complex64::from_polar(1.0, -p.phi) * k(r - 1))
            }
        }
    }
}

/// Closed-form `Sigma_e^D(z)`; real `z` means `z + i0^+`.
pub fn self_energy(z: Complex64, d: Sublattice, p: &LatticeParams, g: f64) -> Result<Complex64> {
    if g == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(g * g * LatticeGreen::new(z, p)?.element(d, d, 0))
}

/// Direct momentum sum over `n` equally spaced k points.
pub fn self_energy_ksum(z: Complex64, d: Sublattice, p: &LatticeParams, g: f64, n: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    if g == 0.0 {
        return acc;
    }
    for m in 0..n {
        let k = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * m as f64 / n as f64;
        let bd = bloch_transform(k, p);
        let (wu, wl) = band_energies(k, p);
        let gu = bd.p[d.index()][0].norm_sqr();
        let gl = bd.p[d.index()][1].norm_sqr();
        acc += gu / (z - wu) + gl / (z - wl);
    }
    acc * (g * g / n as f64)
}

/// `Sigma_c^{D1 D2}(z; r) = g^2 <D2, r | G(z) | D1, 0>`: amplitude for a photon
/// emitted by an emitter on `D1` at cell 0 to be absorbed on `D2` at cell `r`.
pub fn collective_self_energy(
    z: Complex64,
    pair: (Sublattice, Sublattice),
    r: i64,
    p: &LatticeParams,
    g: f64,
) -> Result<Complex64> {
    if g == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(g * g * LatticeGreen::new(z, p)?.element(pair.1, pair.0, r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub delta: f64,
    pub lamb_shift: f64,
    pub decay_rate: f64,
}

pub fn spectral_parameters(delta: f64, d: Sublattice, p: &LatticeParams, g: f64) -> Result<SpectralPoint> {
    spectral_parameters_in(delta, d, p, g, &band_extrema(p), 0.0)
}

/// Same as [`spectral_parameters`] with precomputed band edges and an explicit
/// broadening `eta` (`0` takes the exact limit).
pub fn spectral_parameters_in(
    delta: f64,
    d: Sublattice,
    p: &LatticeParams,
    g: f64,
    edges: &BandEdgeSet,
    eta: f64,
) -> Result<SpectralPoint> {
    if edges.edge_distance(delta) <= 1e-9 * p.scale() {
        let step = 1e-6 * p.scale();
        let probe = if edges.in_any_band(delta - step) { delta + step } else { delta - step };
        let s = self_energy(Complex64::new(probe, 0.0), d, p, g)?;
        return Err(SawtoothError::BandEdge {
            delta,
            divergence_sign: s.re.signum(),
        });
    }
    let s = self_energy(Complex64::new(delta, eta), d, p, g)?;
    let in_gap = !edges.in_any_band(delta);
    Ok(SpectralPoint {
        delta,
        lamb_shift: s.re,
        decay_rate: if in_gap && eta == 0.0 { 0.0 } else { -2.0 * s.im },
    })
}
