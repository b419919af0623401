//! Two resonators with a modulated coupling `J cos(delta t + phi)`.
//!
//! Restricted to one excitation the drive couples `|10>` and `|01>` through
//! both rotating components of the cosine. In the frame of the bare
//! resonators the off-diagonal element is
//! `(J/2) (e^{i phi} + e^{-i(2 delta t + phi)})`, so the slow part is a
//! hopping of magnitude `J/2` carrying the drive phase.

use crate::error::{Result, SawtoothError, Warning};
use crate::lattice::wrap_phase;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametricPairConfig {
    pub omega: f64,
    /// Frequency offset of the second resonator, `omega_2 = omega + delta`.
    #[serde(rename = "delta")]
    pub delta_detuning: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub phi: f64,
    pub t_max: f64,
    /// Output sampling interval.
    pub dt: f64,
}

impl ParametricPairConfig {
    /// One full exchange period at the nominal hopping, sampled 2000 times.
    pub fn with_defaults(omega: f64, delta: f64, j: f64, phi: f64) -> Self {
        let t_max = if j > 0.0 { 2.0 * PI / j } else { 100.0 / omega };
        ParametricPairConfig {
            omega,
            delta_detuning: delta,
            j,
            phi,
            t_max,
            dt: t_max / 2000.0,
        }
    }

    pub fn validate(&self) -> Result<Option<Warning>> {
        let finite = [self.omega, self.delta_detuning, self.j, self.phi, self.t_max, self.dt]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.omega <= 0.0 || self.t_max <= 0.0 || self.dt <= 0.0 || self.j < 0.0 {
            return Err(SawtoothError::InvalidParameter(
                "parametric pair needs omega, t_max, dt > 0 and J >= 0".into(),
            ));
        }
        let (jr, dr) = (self.j / self.omega, self.delta_detuning.abs() / self.omega);
        Ok((jr >= 0.05 || dr >= 0.2).then_some(Warning::StrongDrive {
            j_over_omega: jr,
            delta_over_omega: dr,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricTrajectory {
    pub times: Vec<f64>,
    /// Amplitudes in the frame of the bare resonators.
    pub c1: Vec<Complex64>,
    pub c2: Vec<Complex64>,
    /// Perturbative weight lost to pair creation, `(J / (2 omega + delta))^2`.
    pub leakage_estimate: f64,
    pub warnings: Vec<Warning>,
}

type State = [Complex64; 2];

const TOL: f64 = 1e-10;
const NORM_DRIFT: f64 = 1e-8;

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp_step<F: Fn(f64, &State) -> State>(f: &F, t: f64, y: &State, h: f64) -> (State, f64) {
    let mut k = [[Complex64::new(0.0, 0.0); 2]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for i in 0..2 {
                ys[i] += h * A[s][j] * kj[i];
            }
        }
        k[s] = f(t + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err: f64 = 0.0;
    for i in 0..2 {
        let mut e = Complex64::new(0.0, 0.0);
        for s in 0..7 {
            y5[i] += h * B5[s] * k[s][i];
            e += h * (B5[s] - B4[s]) * k[s][i];
        }
        let sc = TOL + TOL * y[i].norm().max(y5[i].norm());
        err = err.max(e.re.abs() / sc).max(e.im.abs() / sc);
    }
    (y5, err)
}

/// Adaptive integration of `i dy/dt = H(t) y` through the requested output times.
fn integrate<F: Fn(f64, &State) -> State>(rhs: F, y0: State, times: &[f64], h0: f64) -> Result<Vec<State>> {
    let norm = |y: &State| (y[0].norm_sqr() + y[1].norm_sqr()).sqrt();
    let n0 = norm(&y0);
    let t_end = times.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut y, mut h) = (0.0, y0, h0);
    for &target in times {
        while t < target {
            let mut rejected = 0;
            loop {
                let step = h.min(target - t);
                let (yn, err) = dp_step(&rhs, t, &y, step);
                // each step may spend its share of the total drift budget
                let drift = (norm(&yn) - norm(&y)).abs();
                if err <= 1.0 && drift <= NORM_DRIFT * step / t_end {
                    t = if step == target - t { target } else { t + step };
                    y = yn;
                    let grow = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
                    if step == h || grow < 1.0 {
                        h *= grow.clamp(0.2, 5.0);
                    }
                    break;
                }
                rejected += 1;
                if rejected > 60 || step < 1e-14 * target.max(1.0) {
                    return Err(SawtoothError::NormDrift {
                        t,
                        drift: (norm(&yn) - n0).abs(),
                    });
                }
                h = step * if err > 1.0 { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.5 };
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// Integrates the single-excitation model in the frame rotating at `omega`
/// (a global phase) and reports amplitudes in the frame of both bare resonators.
pub fn simulate_parametric_pair(cfg: &ParametricPairConfig) -> Result<ParametricTrajectory> {
    let mut warnings: Vec<Warning> = cfg.validate()?.into_iter().collect();
    let n = (cfg.t_max / cfg.dt).round().max(1.0) as usize;
    let times: Vec<f64> = (0..=n).map(|i| cfg.t_max * i as f64 / n as f64).collect();
    let (d, j, phi) = (cfg.delta_detuning, cfg.j, wrap_phase(cfg.phi));
    let rhs = move |t: f64, y: &State| {
        let drive = j * (d * t + phi).cos();
        let mi = Complex64::new(0.0, -1.0);
        [mi * drive * y[1], mi * (drive * y[0] + d * y[1])]
    };
    let fastest = d.abs() + 2.0 * j + 1e-300;
    let states = integrate(
        rhs,
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        &times,
        0.05 / fastest,
    )?;
    let c1: Vec<Complex64> = states.iter().map(|s| s[0]).collect();
    let c2: Vec<Complex64> = times
        .iter()
        .zip(&states)
        .map(|(t, s)| s[1] * Complex64::from_polar(1.0, d * t))
        .collect();
    let leakage_estimate = (j / (2.0 * cfg.omega + d)).powi(2);
    if leakage_estimate > 1e-2 {
        warnings.push(Warning::BathLeakage {
            leakage: leakage_estimate,
        });
    }
    Ok(ParametricTrajectory {
        times,
        c1,
        c2,
        leakage_estimate,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHopping {
    pub value: Complex64,
    pub magnitude: f64,
    pub phase: f64,
    /// RMS misfit of the two-level model.
    pub residual: f64,
    pub warning: Option<Warning>,
}

/// Fits `c1 = cos(|K| t)`, `c2 = -i e^{-i arg K} sin(|K| t)`.
pub fn extract_effective_hopping(traj: &ParametricTrajectory, cfg: &ParametricPairConfig) -> Result<EffectiveHopping> {
    if cfg.j <= 0.0 || traj.times.last().copied().unwrap_or(0.0) < 0.99 * 2.0 * PI / cfg.j {
        return Err(SawtoothError::InvalidParameter(
            "need at least one full exchange period to fit the hopping".into(),
        ));
    }
    // remove any global phase carried by the initial state
    let g0 = traj.c1[0].conj() / traj.c1[0].norm();
    let c1: Vec<Complex64> = traj.c1.iter().map(|c| c * g0).collect();
    let c2: Vec<Complex64> = traj.c2.iter().map(|c| c * g0).collect();
    let t = &traj.times;

    let phase_for = |k: f64| {
        let s: Complex64 = t.iter().zip(&c2).map(|(t, c)| c * (k * t).sin()).sum();
        // u = -i e^{-i theta} = s / |s|
        let u = s / s.norm();
        -(Complex64::i() * u).arg()
    };
    let misfit = |k: f64| {
        let theta = phase_for(k);
        let u = Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, -theta);
        let sum: f64 = t
            .iter()
            .zip(c1.iter().zip(&c2))
            .map(|(t, (a, b))| (a - (k * t).cos()).norm_sqr() + (b - u * (k * t).sin()).norm_sqr())
            .sum();
        (sum / t.len() as f64).sqrt()
    };

    let guess = 0.5 * cfg.j;
    let (mut lo, mut hi) = (0.7 * guess, 1.3 * guess);
    // coarse scan, then golden section
    let mut best = (guess, f64::INFINITY);
    for i in 0..=600 {
        let k = lo + (hi - lo) * i as f64 / 600.0;
        let m = misfit(k);
        if m < best.1 {
            best = (k, m);
        }
    }
    let step = (hi - lo) / 600.0;
    lo = best.0 - step;
    hi = best.0 + step;
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let a = hi - gr * (hi - lo);
        let b = lo + gr * (hi - lo);
        if misfit(a) < misfit(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let k = 0.5 * (lo + hi);
    let phase = phase_for(k);
    let residual = misfit(k);
    Ok(EffectiveHopping {
        value: Complex64::from_polar(k, phase),
        magnitude: k,
        phase,
        residual,
        warning: (residual > 0.05).then_some(Warning::RwaBreakdown { residual }),
    })
}
