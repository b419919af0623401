//! Single-excitation dynamics of emitters on a finite sawtooth ring or chain.
//!
//! Basis ordering: `a_n -> 2n`, `b_n -> 2n + 1`, emitter `j -> 2N + j`.

use crate::error::{Result, SawtoothError, Warning};
use crate::green::self_energy;
use crate::lattice::{band_extrema, LatticeParams, Sublattice};
use crate::propagate::{ChebyshevPropagator, CsrMatrix, DensePropagator};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Dimension up to which `Method::Auto` diagonalizes.
pub const DENSE_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emitter {
    pub delta: f64,
    pub g: f64,
    pub sublattice: Sublattice,
    pub site: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmitterArrangement {
    pub emitters: Vec<Emitter>,
}

impl EmitterArrangement {
    pub fn new(emitters: Vec<Emitter>) -> Self {
        EmitterArrangement { emitters }
    }

    pub fn single(delta: f64, g: f64, sublattice: Sublattice, site: usize) -> Self {
        EmitterArrangement::new(vec![Emitter {
            delta,
            g,
            sublattice,
            site,
        }])
    }

    pub fn len(&self) -> usize {
        self.emitters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emitters.is_empty()
    }

    pub fn validate(&self, n_cells: usize) -> Result<()> {
        for (i, e) in self.emitters.iter().enumerate() {
            if e.site >= n_cells {
                return Err(SawtoothError::SiteOutOfRange {
                    index: i,
                    site: e.site,
                    n_cells,
                });
            }
            if !(e.delta.is_finite() && e.g.is_finite()) {
                return Err(SawtoothError::InvalidParameter(format!("emitter {i} has non-finite parameters")));
            }
            for (j, o) in self.emitters.iter().enumerate().take(i) {
                if o.site == e.site && o.sublattice == e.sublattice {
                    return Err(SawtoothError::DuplicateEmitter { first: j, second: i });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

pub fn site_index(s: Sublattice, n: usize) -> usize {
    2 * n + s.index()
}

/// Real-space Hamiltonian restricted to one excitation.
#[derive(Debug, Clone)]
pub struct SystemHamiltonian {
    pub matrix: CsrMatrix,
    pub n_cells: usize,
    pub n_emitters: usize,
    pub boundary: Boundary,
}

impl SystemHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

pub fn build_hamiltonian(
    p: &LatticeParams,
    emitters: &EmitterArrangement,
    boundary: Boundary,
) -> Result<SystemHamiltonian> {
    p.validate_finite()?;
    let n = p.n_cells;
    emitters.validate(n)?;
    let dim = 2 * n + emitters.len();
    let mut trip = Vec::with_capacity(12 * n + 3 * emitters.len());
    let mut bond = |i: usize, j: usize, v: Complex64| {
        trip.push((i, j, v));
        trip.push((j, i, v.conj()));
    };
    let twist = Complex64::from_polar(p.j_ab, -p.phi);
    for c in 0..n {
        let (a, b) = (site_index(Sublattice::A, c), site_index(Sublattice::B, c));
        bond(a, b, Complex64::new(-p.j_ab, 0.0));
        if c + 1 < n || boundary == Boundary::Periodic {
            let an = site_index(Sublattice::A, (c + 1) % n);
            bond(a, an, Complex64::new(-p.j_aa, 0.0));
            // <a_{c+1}| H |b_c> = -J_AB e^{-i phi}
            bond(an, b, -twist);
        }
    }
    for (j, e) in emitters.emitters.iter().enumerate() {
        bond(2 * n + j, site_index(e.sublattice, e.site), Complex64::new(e.g, 0.0));
    }
    for i in 0..2 * n {
        trip.push((i, i, Complex64::new(p.omega_b, 0.0)));
    }
    for (j, e) in emitters.emitters.iter().enumerate() {
        trip.push((2 * n + j, 2 * n + j, Complex64::new(e.delta, 0.0)));
    }
    Ok(SystemHamiltonian {
        matrix: CsrMatrix::from_triplets(dim, trip),
        n_cells: n,
        n_emitters: emitters.len(),
        boundary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleExcitationState {
    pub c_e: Vec<Complex64>,
    pub c_a: Vec<Complex64>,
    pub c_b: Vec<Complex64>,
}

impl SingleExcitationState {
    /// All weight on emitter `j`.
    pub fn excited_emitter(n_cells: usize, n_emitters: usize, j: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let mut c_e = vec![zero; n_emitters];
        c_e[j] = Complex64::new(1.0, 0.0);
        SingleExcitationState {
            c_e,
            c_a: vec![zero; n_cells],
            c_b: vec![zero; n_cells],
        }
    }

    pub fn from_vector(v: &[Complex64], n_cells: usize) -> Self {
        SingleExcitationState {
            c_a: (0..n_cells).map(|c| v[2 * c]).collect(),
            c_b: (0..n_cells).map(|c| v[2 * c + 1]).collect(),
            c_e: v[2 * n_cells..].to_vec(),
        }
    }

    pub fn to_vector(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(2 * self.c_a.len() + self.c_e.len());
        for (a, b) in self.c_a.iter().zip(&self.c_b) {
            v.push(*a);
            v.push(*b);
        }
        v.extend_from_slice(&self.c_e);
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_e
            .iter()
            .chain(&self.c_a)
            .chain(&self.c_b)
            .map(|c| c.norm_sqr())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Auto,
    Dense,
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SingleExcitationState>,
}

const NORM_DRIFT: f64 = 1e-8;

/// `exp(-iHt) state0` at each requested time (times must be non-decreasing).
pub fn evolve(
    state0: &SingleExcitationState,
    h: &SystemHamiltonian,
    times: &[f64],
    method: Method,
) -> Result<Trajectory> {
    let psi0 = state0.to_vector();
    if psi0.len() != h.dim() {
        return Err(SawtoothError::InvalidParameter(format!(
            "state has dimension {}, Hamiltonian {}",
            psi0.len(),
            h.dim()
        )));
    }
    let n0 = state0.norm_sqr();
    if (n0 - 1.0).abs() > 1e-10 {
        return Err(SawtoothError::InvalidParameter(format!("initial state norm {n0} is not 1")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !t.is_finite()) {
        return Err(SawtoothError::InvalidParameter("times must be finite and non-decreasing".into()));
    }
    let dense = match method {
        Method::Dense => true,
        Method::Chebyshev => false,
        Method::Auto => h.dim() <= DENSE_LIMIT,
    };
    let mut states = Vec::with_capacity(times.len());
    if dense {
        let prop = DensePropagator::new(&h.matrix);
        for &t in times {
            let v = prop.propagate(&psi0, t);
            check_norm(&v, t)?;
            states.push(SingleExcitationState::from_vector(&v, h.n_cells));
        }
    } else {
        let prop = ChebyshevPropagator::new(&h.matrix);
        let mut cur = psi0.clone();
        let mut t_cur = 0.0;
        for &t in times {
            if t == 0.0 {
                states.push(state0.clone());
                continue;
            }
            cur = prop.propagate(&cur, t - t_cur, |v| check_norm(v, t))?;
            t_cur = t;
            states.push(SingleExcitationState::from_vector(&cur, h.n_cells));
        }
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
    })
}

fn check_norm(v: &[Complex64], t: f64) -> Result<()> {
    let n: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let drift = (n.sqrt() - 1.0).abs();
    if drift > NORM_DRIFT {
        return Err(SawtoothError::NormDrift { t, drift });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterSeries {
    pub times: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub survival: Vec<f64>,
}

pub fn emitter_amplitude(traj: &Trajectory, j: usize) -> EmitterSeries {
    let amplitude: Vec<Complex64> = traj.states.iter().map(|s| s.c_e[j]).collect();
    EmitterSeries {
        times: traj.times.clone(),
        survival: amplitude.iter().map(|c| c.norm_sqr()).collect(),
        amplitude,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovPrediction {
    /// Amplitude in the frame rotating at `delta`.
    pub amplitude: Vec<Complex64>,
    pub survival: Vec<f64>,
    pub self_energy: Complex64,
    pub warning: Option<Warning>,
}

/// `c_e(t) = exp(-i Sigma(delta + i0^+) t)`.
pub fn markov_prediction(
    delta: f64,
    d: Sublattice,
    p: &LatticeParams,
    g: f64,
    times: &[f64],
) -> Result<MarkovPrediction> {
    let sigma = self_energy(Complex64::new(delta, 0.0), d, p, g)?;
    let warning = if band_extrema(p).in_any_band(delta) {
        None
    } else {
        Some(Warning::InGapMarkov { delta })
    };
    let amplitude: Vec<Complex64> = times.iter().map(|&t| (-Complex64::i() * sigma * t).exp()).collect();
    Ok(MarkovPrediction {
        survival: amplitude.iter().map(|c| c.norm_sqr()).collect(),
        amplitude,
        self_energy: sigma,
        warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonPopulations {
    pub times: Vec<f64>,
    /// `[time][cell]`
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub emitters: Vec<Vec<f64>>,
}

pub fn photon_populations(traj: &Trajectory) -> PhotonPopulations {
    let sq = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).collect::<Vec<f64>>();
    PhotonPopulations {
        times: traj.times.clone(),
        a: traj.states.iter().map(|s| sq(&s.c_a)).collect(),
        b: traj.states.iter().map(|s| sq(&s.c_b)).collect(),
        emitters: traj.states.iter().map(|s| sq(&s.c_e)).collect(),
    }
}

/// Photon weight left and right of the emitter; each pair sums to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalFractions {
    pub left: f64,
    pub right: f64,
    pub left_a: f64,
    pub right_a: f64,
    pub left_b: f64,
    pub right_b: f64,
    /// Photon population outside the exclusion window.
    pub total: f64,
}

/// Signed cell offsets wrap around the ring for periodic lattices.
pub fn directional_fractions(
    snapshot: &SingleExcitationState,
    origin: usize,
    exclusion: usize,
    boundary: Boundary,
) -> Result<DirectionalFractions> {
    let n = snapshot.c_a.len();
    let (mut la, mut ra, mut lb, mut rb) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..n {
        let mut d = c as i64 - origin as i64;
        if boundary == Boundary::Periodic {
            let half = n as i64 / 2;
            d = (d + half).rem_euclid(n as i64) - half;
        }
        if d.unsigned_abs() as usize <= exclusion {
            continue;
        }
        let (pa, pb) = (snapshot.c_a[c].norm_sqr(), snapshot.c_b[c].norm_sqr());
        if d < 0 {
            la += pa;
            lb += pb;
        } else {
            ra += pa;
            rb += pb;
        }
    }
    let total = la + ra + lb + rb;
    if total < 1e-6 {
        return Err(SawtoothError::UndefinedFraction { total });
    }
    let frac = |x: f64, y: f64| if x + y > 0.0 { x / (x + y) } else { f64::NAN };
    Ok(DirectionalFractions {
        left: (la + lb) / total,
        right: (ra + rb) / total,
        left_a: frac(la, ra),
        right_a: frac(ra, la),
        left_b: frac(lb, rb),
        right_b: frac(rb, lb),
        total,
    })
}
