//! Bath-mediated exchange between emitters tuned into a gap.

use crate::dynamics::{
    build_hamiltonian, emitter_amplitude, evolve, Boundary, Emitter, EmitterArrangement, Method, SingleExcitationState,
};
use crate::error::{Result, SawtoothError, Warning};
use crate::green::LatticeGreen;
use crate::lattice::{band_extrema, wrap_phase, LatticeParams, Sublattice};
use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `couplings[i][j]` is the amplitude for an excitation to hop from emitter
/// `i` to emitter `j`; `couplings[j][i]` is its conjugate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSpinModel {
    pub delta: f64,
    pub emitters: Vec<Emitter>,
    pub couplings: Vec<Vec<Complex64>>,
    /// `Re Sigma_D(delta)` for each emitter, dropped from the off-diagonal model.
    pub lamb_shifts: Vec<f64>,
}

impl EffectiveSpinModel {
    pub fn len(&self) -> usize {
        self.emitters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emitters.is_empty()
    }

    pub fn coupling(&self, from: usize, to: usize) -> Complex64 {
        self.couplings[from][to]
    }

    /// Single-excitation matrix `H[j][i] = J_ij` with empty diagonal.
    pub fn hamiltonian(&self) -> DMatrix<Complex64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |r, c| self.couplings[c][r])
    }
}

/// `J_ij = g_i g_j <D_j, x_j | G(delta) | D_i, x_i>`, i.e. the collective
/// self-energy at separation `x_j - x_i`.
pub fn effective_couplings(emitters: &EmitterArrangement, p: &LatticeParams, delta: f64) -> Result<EffectiveSpinModel> {
    for e in &emitters.emitters {
        if (e.delta - delta).abs() > 1e-12 * p.scale() {
            return Err(SawtoothError::UnequalDetunings {
                first: delta,
                other: e.delta,
            });
        }
    }
    let edges = band_extrema(p);
    if edges.in_any_band(delta) || edges.edge_distance(delta) <= 1e-9 * p.scale() {
        return Err(SawtoothError::MarkovInvalid { delta });
    }
    let lg = LatticeGreen::new(Complex64::new(delta, 0.0), p)?;
    let em = &emitters.emitters;
    let n = em.len();
    let mut couplings = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = em[j].site as i64 - em[i].site as i64;
            let jij = em[i].g * em[j].g * lg.element(em[j].sublattice, em[i].sublattice, r);
            couplings[i][j] = jij;
            couplings[j][i] = jij.conj();
        }
    }
    let lamb_shifts = em
        .iter()
        .map(|e| e.g * e.g * lg.element(e.sublattice, e.sublattice, 0).re)
        .collect();
    Ok(EffectiveSpinModel {
        delta,
        emitters: em.clone(),
        couplings,
        lamb_shifts,
    })
}

/// Sum of `arg J` along the closed path `path[0] -> path[1] -> ... -> path[0]`.
pub fn loop_phase(model: &EffectiveSpinModel, path: &[usize]) -> Result<f64> {
    if path.len() < 2 {
        return Err(SawtoothError::InvalidParameter("a loop needs at least two emitters".into()));
    }
    let mut total = 0.0;
    for (idx, &from) in path.iter().enumerate() {
        let to = path[(idx + 1) % path.len()];
        if from >= model.len() || to >= model.len() {
            return Err(SawtoothError::InvalidParameter(format!("path entry out of range: {from} -> {to}")));
        }
        let j = model.coupling(from, to);
        if j.norm() <= 1e-12 {
            return Err(SawtoothError::BrokenLink {
                from,
                to,
                magnitude: j.norm(),
            });
        }
        total += j.arg();
    }
    Ok(wrap_phase(total))
}

/// Emitters on `a:0`, `a:1` and `b:0`; the loop visits them in that order.
pub fn triangle_arrangement(delta: f64, g: f64, origin: usize) -> EmitterArrangement {
    let at = |s, site| Emitter {
        delta,
        g,
        sublattice: s,
        site,
    };
    EmitterArrangement::new(vec![
        at(Sublattice::A, origin),
        at(Sublattice::A, origin + 1),
        at(Sublattice::B, origin),
    ])
}

/// `sum arg Sigma_c^{pair}(delta; r)` over the listed terms, wrapped.
pub fn offset_phase_sum(
    p: &LatticeParams,
    delta: f64,
    g: f64,
    terms: &[((Sublattice, Sublattice), i64)],
) -> Result<f64> {
    let lg = LatticeGreen::new(Complex64::new(delta, 0.0), p)?;
    let total: f64 = terms
        .iter()
        .map(|&((d1, d2), r)| (g * g * lg.element(d2, d1, r)).arg())
        .sum();
    Ok(wrap_phase(total))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeValidation {
    pub coupling: Complex64,
    /// `2 |J_12|`.
    pub predicted_frequency: f64,
    /// Angular frequency of `P_1(t) - P_2(t)` from the exact evolution.
    pub exact_frequency: f64,
    pub relative_error: f64,
    /// Largest photon population seen during the run.
    pub leakage: f64,
    pub warning: Option<Warning>,
}

/// Frequency of the best least-squares fit `A cos(wt) + B sin(wt) + C`:
/// a periodogram scan locates the peak, golden section refines it.
pub fn dominant_frequency(times: &[f64], signal: &[f64]) -> f64 {
    let n = signal.len();
    if n < 4 {
        return 0.0;
    }
    let span = times[n - 1] - times[0];
    if span <= 0.0 {
        return 0.0;
    }
    let explained = |w: f64| {
        let mut m = Matrix3::<f64>::zeros();
        let mut rhs = Vector3::<f64>::zeros();
        for (t, s) in times.iter().zip(signal) {
            let basis = Vector3::new((w * t).cos(), (w * t).sin(), 1.0);
            m += basis * basis.transpose();
            rhs += basis * *s;
        }
        match m.lu().solve(&rhs) {
            Some(coef) => coef.dot(&rhs),
            None => 0.0,
        }
    };
    let dt = span / (n - 1) as f64;
    let step = std::f64::consts::PI / (4.0 * span);
    let wmax = std::f64::consts::PI / dt;
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut w = step;
    while w < wmax {
        let e = explained(w);
        if e > best.1 {
            best = (w, e);
        }
        w += step;
    }
    let (mut a, mut b) = ((best.0 - step).max(0.0), best.0 + step);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - gr * (b - a);
        let d = a + gr * (b - a);
        if explained(c) > explained(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Exact two-emitter evolution on a ring of `p.n_cells` cells compared with
/// the effective exchange. `t_max` defaults to four exchange periods.
pub fn validate_exchange(
    pair: &EmitterArrangement,
    p: &LatticeParams,
    t_max: Option<f64>,
) -> Result<ExchangeValidation> {
    if pair.len() != 2 {
        return Err(SawtoothError::InvalidParameter("exchange validation needs exactly two emitters".into()));
    }
    let delta = pair.emitters[0].delta;
    let model = effective_couplings(pair, p, delta)?;
    let j12 = model.coupling(0, 1);
    let predicted = 2.0 * j12.norm();
    if predicted == 0.0 {
        return Ok(ExchangeValidation {
            coupling: j12,
            predicted_frequency: 0.0,
            exact_frequency: 0.0,
            relative_error: 0.0,
            leakage: 0.0,
            warning: None,
        });
    }
    let t_max = t_max.unwrap_or(4.0 * 2.0 * std::f64::consts::PI / predicted);
    let samples = 1024;
    let times: Vec<f64> = (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect();
    let h = build_hamiltonian(p, pair, Boundary::Periodic)?;
    let s0 = SingleExcitationState::excited_emitter(p.n_cells, 2, 0);
    let traj = evolve(&s0, &h, &times, Method::Auto)?;
    let p1 = emitter_amplitude(&traj, 0).survival;
    let p2 = emitter_amplitude(&traj, 1).survival;
    let signal: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| a - b).collect();
    let exact = dominant_frequency(&times, &signal);
    let leakage = p1.iter().zip(&p2).map(|(a, b)| 1.0 - a - b).fold(0.0, f64::max);
    Ok(ExchangeValidation {
        coupling: j12,
        predicted_frequency: predicted,
        exact_frequency: exact,
        relative_error: (predicted - exact).abs() / exact,
        leakage,
        warning: (leakage > 0.1).then_some(Warning::BathLeakage { leakage }),
    })
}
