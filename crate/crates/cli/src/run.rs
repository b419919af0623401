//! One function per command, each returning the tables it produces.

use crate::config::{Command, RunConfig};
use crate::dataset::{complex_cells, Dataset, Table};
use crate::error::CliError;
use num_complex::Complex64;
use rayon::prelude::*;
use sawtooth_core::bound_state::{
    bound_state_energy, bound_state_exists, bound_state_wavefunction, gap_regions, localization_length,
};
use sawtooth_core::circuit::{extract_effective_hopping, simulate_parametric_pair};
use sawtooth_core::dynamics::{
    build_hamiltonian, directional_fractions, Boundary, emitter_amplitude, evolve, markov_prediction, SingleExcitationState,
};
use sawtooth_core::emission::{decay_channels_in, directionality_ratio, RatioKind};
use sawtooth_core::green::{self_energy, spectral_parameters_in};
use sawtooth_core::lattice::{band_energies, band_extrema, reband_crossing, EdgeKind};
use sawtooth_core::spin_model::{effective_couplings, loop_phase, validate_exchange};
use sawtooth_core::{Direction, SawtoothError, Sublattice, Warning};
use std::f64::consts::PI;

type Tables = (Vec<Table>, Vec<Warning>);

pub fn run(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let (tables, warnings) = match cfg.command {
        Command::Bands => bands(cfg)?,
        Command::Selfenergy => selfenergy(cfg)?,
        Command::Decay => decay(cfg)?,
        Command::Sweep => sweep(cfg)?,
        Command::Boundstate => boundstate(cfg)?,
        Command::Spinmodel => spinmodel(cfg)?,
        Command::Floquet => floquet(cfg)?,
        Command::Dynamics => dynamics(cfg)?,
    };
    for w in &warnings {
        log::warn!("{w:?}");
    }
    Ok(Dataset::new(cfg, tables, warnings))
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn default_k() -> Vec<f64> {
    (0..=512).map(|i| -PI + 2.0 * PI * i as f64 / 512.0).collect()
}

fn bands(cfg: &RunConfig) -> Result<Tables, CliError> {
    let e = cfg.units.energy();
    let ks = cfg.grids.k.as_ref().map(|g| g.points()).unwrap_or_else(default_k);
    let phis = cfg.grids.phi.as_ref().map(|g| g.points()).unwrap_or(vec![cfg.lattice.phi]);
    let reband = cfg.options.reband.unwrap_or(false);
    let mut t = Table::new("bands", &[("phi", "rad"), ("k", "rad"), ("omega_u", e), ("omega_l", e)]);
    if reband {
        t = t
            .with_column("omega_plus", e)
            .with_column("omega_minus", e)
            .with_column("G_plus_A", "")
            .with_column("G_minus_A", "")
            .with_column("G_plus_B", "")
            .with_column("G_minus_B", "");
    }
    for &phi in &phis {
        let p = cfg.lattice_at_phi(phi)?;
        let rb = if reband { Some(reband_crossing(&p)?) } else { None };
        for &k in &ks {
            let (u, l) = band_energies(k, &p);
            let mut row = vec![p.phi, k, u, l];
            if let Some(rb) = &rb {
                let q = rb.at(k);
                row.extend([q.omega_plus, q.omega_minus, q.g_plus_a, q.g_minus_a, q.g_plus_b, q.g_minus_b]);
            }
            t.push_values(&row);
        }
    }
    Ok((vec![t], Vec::new()))
}

fn edges_table(cfg: &RunConfig, phis: &[f64]) -> Result<Table, CliError> {
    let mut t = Table::new(
        "edges",
        &[
            ("phi", "rad"),
            ("band", "0=upper,1=lower"),
            ("kind", "0=min,1=max"),
            ("energy", cfg.units.energy()),
            ("k", "rad"),
        ],
    );
    for &phi in phis {
        let p = cfg.lattice_at_phi(phi)?;
        for edge in band_extrema(&p).edges() {
            let kind = flag(edge.kind == EdgeKind::Max);
            t.push_values(&[p.phi, edge.band.index() as f64, kind, edge.energy, edge.momentum]);
        }
    }
    Ok(t)
}

fn selfenergy(cfg: &RunConfig) -> Result<Tables, CliError> {
    let e = cfg.units.energy();
    let p = &cfg.lattice;
    let g = cfg.options.g.unwrap_or_default();
    let eta = cfg.options.eta.unwrap_or(0.0);
    let edges = band_extrema(p);
    let deltas = cfg.grids.delta.as_ref().map(|g| g.points()).unwrap_or_default();
    let mut t = Table::new("selfenergy", &[("delta", e)])
        .with_complex("sigma_A", e)
        .with_complex("sigma_B", e)
        .with_column("gamma_A", e)
        .with_column("gamma_B", e);
    let rows: Result<Vec<Vec<Option<f64>>>, SawtoothError> = deltas
        .par_iter()
        .map(|&delta| {
            let mut sig = Vec::new();
            let mut gam = Vec::new();
            for d in [Sublattice::A, Sublattice::B] {
                if eta > 0.0 {
                    let s = self_energy(Complex64::new(delta, eta), d, p, g)?;
                    sig.extend(complex_cells(s));
                    gam.push(Some(-2.0 * s.im));
                } else {
                    match spectral_parameters_in(delta, d, p, g, &edges, 0.0) {
                        Ok(sp) => {
                            sig.extend([Some(sp.lamb_shift), Some(-0.5 * sp.decay_rate)]);
                            gam.push(Some(sp.decay_rate));
                        }
                        Err(SawtoothError::BandEdge { .. }) => {
                            sig.extend([None, None]);
                            gam.push(None);
                        }
                        Err(err) => return Err(err),
                    }
                }
            }
            let mut row = vec![Some(delta)];
            row.extend(sig);
            row.extend(gam);
            Ok(row)
        })
        .collect();
    for row in rows? {
        t.push(row);
    }
    Ok((vec![t, edges_table(cfg, &[p.phi])?], Vec::new()))
}

fn decay(cfg: &RunConfig) -> Result<Tables, CliError> {
    let e = cfg.units.energy();
    let p = &cfg.lattice;
    let d = cfg.sublattice();
    let g = cfg.options.g.unwrap_or_default();
    let edges = band_extrema(p);
    let mut channels = Table::new(
        "channels",
        &[
            ("delta", e),
            ("k", "rad"),
            ("band", "0=upper,1=lower"),
            ("velocity", e),
            ("direction", "-1=left,1=right"),
            ("Gamma_a", e),
            ("Gamma_b", e),
        ],
    );
    let mut ratios = Table::new(
        "ratios",
        &[
            ("delta", e),
            ("gamma", e),
            ("R_L_global", ""),
            ("R_L_a", ""),
            ("R_L_b", ""),
            ("one_sided", "0/1"),
        ],
    );
    let mut warnings = Vec::new();
    for delta in cfg.grids.delta.as_ref().map(|g| g.points()).unwrap_or_default() {
        match decay_channels_in(delta, d, p, g, &edges) {
            Ok(ch) => {
                for c in &ch.channels {
                    let dir = if c.direction == Direction::Left { -1.0 } else { 1.0 };
                    channels.push_values(&[delta, c.k, c.band.index() as f64, c.velocity, dir, c.gamma_a, c.gamma_b]);
                }
                let r = directionality_ratio(&ch);
                if r.one_sided {
                    warnings.push(Warning::OneSided);
                }
                ratios.push(vec![
                    Some(delta),
                    Some(ch.total()),
                    Some(r.global_left),
                    Some(r.local_left_a),
                    Some(r.local_left_b),
                    Some(flag(r.one_sided)),
                ]);
            }
            Err(SawtoothError::NotInBand { .. }) | Err(SawtoothError::BandEdge { .. }) => {
                ratios.push(vec![Some(delta), Some(0.0), None, None, None, None]);
            }
            Err(err) => return Err(err.into()),
        }
    }
    warnings.dedup();
    Ok((vec![channels, ratios], warnings))
}

fn sweep(cfg: &RunConfig) -> Result<Tables, CliError> {
    let d = cfg.sublattice();
    let g = cfg.options.g.unwrap_or_default();
    let kinds = cfg.options.ratios.clone().unwrap_or(vec![RatioKind::Global]);
    let deltas = cfg.grids.delta.as_ref().map(|g| g.points()).unwrap_or_default();
    let phis = cfg.grids.phi.as_ref().map(|g| g.points()).unwrap_or_default();
    let mut cols = vec![("phi", "rad"), ("delta", cfg.units.energy())];
    for k in &kinds {
        cols.push(match k {
            RatioKind::Global => ("R_L_global", ""),
            RatioKind::LocalA => ("R_L_a", ""),
            RatioKind::LocalB => ("R_L_b", ""),
        });
    }
    let mut t = Table::new("sweep", &cols);
    let rows: Result<Vec<Vec<Vec<Option<f64>>>>, CliError> = phis
        .par_iter()
        .map(|&phi| {
            let p = cfg.lattice_at_phi(phi)?;
            let edges = band_extrema(&p);
            Ok(deltas
                .iter()
                .map(|&delta| {
                    let report = decay_channels_in(delta, d, &p, g, &edges)
                        .ok()
                        .filter(|c| !c.channels.is_empty())
                        .map(|c| directionality_ratio(&c));
                    let mut row = vec![Some(p.phi), Some(delta)];
                    row.extend(kinds.iter().map(|k| report.as_ref().map(|r| k.pick(r))));
                    row
                })
                .collect())
        })
        .collect();
    for block in rows? {
        for row in block {
            t.push(row);
        }
    }
    Ok((vec![t], Vec::new()))
}

fn boundstate(cfg: &RunConfig) -> Result<Tables, CliError> {
    let e = cfg.units.energy();
    let p = &cfg.lattice;
    let d = cfg.sublattice();
    let g = cfg.options.g.unwrap_or_default();
    let delta = cfg.options.delta.unwrap_or_default();
    let ks = cfg.grids.k.as_ref().map(|g| g.points()).unwrap_or_else(default_k);
    let mut energies = Table::new(
        "energies",
        &[
            ("m", ""),
            ("energy", e),
            ("c_e_sq", ""),
            ("c_e_sq_derivative", ""),
            ("xi", "cells"),
            ("xi_fit", "cells"),
            ("site_phase", "rad"),
        ],
    );
    let mut wave = Table::new("wavefunction", &[("m", ""), ("n", "cells")])
        .with_complex("c_a", "")
        .with_complex("c_b", "");
    let mut momentum = Table::new("momentum", &[("m", ""), ("k", "rad"), ("density_a", ""), ("density_b", "")]);
    let mut warnings = Vec::new();
    for gap in gap_regions(p).iter() {
        let Some(bs) = bound_state_energy(&gap, delta, d, p, g)? else {
            continue;
        };
        warnings.extend(bs.warning.clone());
        let rec = bound_state_wavefunction(bs.energy, d, p, g, cfg.options.window)?;
        warnings.extend(rec.warnings.iter().cloned());
        let m = gap.m as f64;
        let xi_fit = localization_length(&rec).ok();
        energies.push(vec![
            Some(m),
            Some(rec.energy),
            Some(rec.c_e.norm_sqr()),
            Some(rec.c_e_sq_from_derivative),
            Some(rec.xi),
            xi_fit,
            Some(rec.site_phase),
        ]);
        for (i, &n) in rec.cells.iter().enumerate() {
            let mut row = vec![Some(m), Some(n as f64)];
            row.extend(complex_cells(rec.c_a[i]));
            row.extend(complex_cells(rec.c_b[i]));
            wave.push(row);
        }
        for &k in &ks {
            momentum.push_values(&[m, k, rec.momentum_density(Sublattice::A, k), rec.momentum_density(Sublattice::B, k)]);
        }
    }
    let mut tables = vec![energies, wave, momentum];
    if band_extrema(p).middle_gap_open {
        let x = bound_state_exists(delta, d, p, g)?;
        let mut t = Table::new(
            "middle_gap",
            &[
                ("exists", "0/1"),
                ("lower_edge", e),
                ("sigma_lower", e),
                ("F_lower", e),
                ("upper_edge", e),
                ("sigma_upper", e),
                ("F_upper", e),
                ("reading_conditions_swapped", "0/1"),
                ("reading_a_conditional", "0/1"),
            ],
        );
        t.push_values(&[
            flag(x.exists),
            x.lower_edge.edge,
            x.lower_edge.sigma,
            x.lower_edge.f,
            x.upper_edge.edge,
            x.upper_edge.sigma,
            x.upper_edge.f,
            flag(x.reading_conditions_swapped),
            flag(x.reading_a_conditional),
        ]);
        tables.push(t);
    }
    Ok((tables, warnings))
}

fn spinmodel(cfg: &RunConfig) -> Result<Tables, CliError> {
    let e = cfg.units.energy();
    let p = &cfg.lattice;
    let delta = cfg.options.delta.unwrap_or(cfg.emitters.emitters[0].delta);
    let model = effective_couplings(&cfg.emitters, p, delta)?;
    let mut couplings = Table::new("couplings", &[("from", ""), ("to", "")])
        .with_complex("J", e)
        .with_column("abs_J", e)
        .with_column("arg_J", "rad");
    for i in 0..model.len() {
        for j in 0..model.len() {
            if i != j {
                let c = model.coupling(i, j);
                couplings.push_values(&[i as f64, j as f64, c.re, c.im, c.norm(), c.arg()]);
            }
        }
    }
    let mut shifts = Table::new("lamb_shifts", &[("emitter", ""), ("shift", e)]);
    for (i, s) in model.lamb_shifts.iter().enumerate() {
        shifts.push_values(&[i as f64, *s]);
    }
    let mut tables = vec![couplings, shifts];
    let mut warnings = Vec::new();
    if let Some(path) = &cfg.options.path {
        let mut t = Table::new("loop", &[("phase", "rad")]);
        t.push_values(&[loop_phase(&model, path)?]);
        tables.push(t);
    }
    if cfg.options.validate_exchange.unwrap_or(false) {
        if cfg.emitters.len() != 2 {
            return Err(CliError::Config("exchange validation needs exactly two emitters".into()));
        }
        let v = validate_exchange(&cfg.emitters, p, None)?;
        warnings.extend(v.warning.clone());
        let mut t = Table::new(
            "exchange",
            &[
                ("predicted_frequency", e),
                ("exact_frequency", e),
                ("relative_error", ""),
                ("leakage", ""),
            ],
        );
        t.push_values(&[v.predicted_frequency, v.exact_frequency, v.relative_error, v.leakage]);
        tables.push(t);
    }
    Ok((tables, warnings))
}

fn floquet(cfg: &RunConfig) -> Result<Tables, CliError> {
    let e = cfg.units.energy();
    let c = cfg.options.circuit.expect("checked on load");
    let tr = simulate_parametric_pair(&c)?;
    let hop = extract_effective_hopping(&tr, &c)?;
    let mut warnings = tr.warnings.clone();
    warnings.extend(hop.warning.clone());
    let mut traj = Table::new("trajectory", &[("t", cfg.units.time())])
        .with_complex("c1", "")
        .with_complex("c2", "");
    for (i, t) in tr.times.iter().enumerate() {
        let mut row = vec![Some(*t)];
        row.extend(complex_cells(tr.c1[i]));
        row.extend(complex_cells(tr.c2[i]));
        traj.push(row);
    }
    let mut h = Table::new("hopping", &[])
        .with_complex("J_eff", e)
        .with_column("abs_J_eff", e)
        .with_column("arg_J_eff", "rad")
        .with_column("drive_phase", "rad")
        .with_column("half_drive", e)
        .with_column("residual", "")
        .with_column("leakage_estimate", "");
    h.push_values(&[
        hop.value.re,
        hop.value.im,
        hop.magnitude,
        hop.phase,
        c.phi,
        0.5 * c.j,
        hop.residual,
        tr.leakage_estimate,
    ]);
    Ok((vec![traj, h], warnings))
}

fn dynamics(cfg: &RunConfig) -> Result<Tables, CliError> {
    let tu = cfg.units.time();
    let p = &cfg.lattice;
    let em = &cfg.emitters;
    let n = p.n_cells;
    let boundary = cfg.options.boundary.unwrap_or_default();
    let method = cfg.options.method.unwrap_or_default();
    let times = cfg.grids.t.as_ref().map(|g| g.points()).unwrap_or_default();
    let h = build_hamiltonian(p, em, boundary)?;
    let s0 = SingleExcitationState::excited_emitter(n, em.len(), 0);
    let traj = evolve(&s0, &h, &times, method)?;
    let mut warnings = Vec::new();

    let mut emit = Table::new("emitters", &[("t", tu)]);
    for j in 0..em.len() {
        emit = emit.with_complex(&format!("c{j}"), "").with_column(&format!("survival{j}"), "");
    }
    let first = em.emitters[0];
    let markov = if em.len() == 1 && band_extrema(p).in_any_band(first.delta) {
        let m = markov_prediction(first.delta, first.sublattice, p, first.g, &times)?;
        warnings.extend(m.warning.clone());
        emit = emit.with_column("markov_survival", "");
        Some(m)
    } else {
        None
    };
    let series: Vec<_> = (0..em.len()).map(|j| emitter_amplitude(&traj, j)).collect();
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![Some(*t)];
        for s in &series {
            row.extend(complex_cells(s.amplitude[i]));
            row.push(Some(s.survival[i]));
        }
        if let Some(m) = &markov {
            row.push(Some(m.survival[i]));
        }
        emit.push(row);
    }

    let origin = first.site;
    let half = n as i64 / 2;
    let mut pops = Table::new("populations", &[("t", tu), ("n", "cells"), ("pop_a", ""), ("pop_b", "")]);
    let exclusion = cfg.options.exclusion.unwrap_or(5);
    let mut fr = Table::new(
        "fractions",
        &[
            ("t", tu),
            ("left", ""),
            ("right", ""),
            ("left_a", ""),
            ("right_a", ""),
            ("left_b", ""),
            ("right_b", ""),
            ("photon_weight", ""),
        ],
    );
    for (t, s) in times.iter().zip(&traj.states) {
        let mut cells: Vec<(i64, usize)> = (0..n)
            .map(|c| {
                let mut off = c as i64 - origin as i64;
                if boundary == Boundary::Periodic {
                    off = (off + half).rem_euclid(n as i64) - half;
                }
                (off, c)
            })
            .collect();
        cells.sort_by_key(|x| x.0);
        for (off, c) in cells {
            pops.push_values(&[*t, off as f64, s.c_a[c].norm_sqr(), s.c_b[c].norm_sqr()]);
        }
        match directional_fractions(s, origin, exclusion, boundary) {
            Ok(f) => fr.push_values(&[*t, f.left, f.right, f.left_a, f.right_a, f.left_b, f.right_b, f.total]),
            Err(SawtoothError::UndefinedFraction { total }) => {
                fr.push(vec![Some(*t), None, None, None, None, None, None, Some(total)])
            }
            Err(err) => return Err(err.into()),
        }
    }
    Ok((vec![emit, pops, fr], warnings))
}
