//! Run configuration: one JSON document per invocation.

use crate::error::CliError;
use sawtooth_core::circuit::ParametricPairConfig;
use sawtooth_core::dynamics::{Boundary, EmitterArrangement, Method};
use sawtooth_core::emission::RatioKind;
use sawtooth_core::{LatticeParams, Sublattice};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Bands,
    Selfenergy,
    Decay,
    Sweep,
    Boundstate,
    Spinmodel,
    Floquet,
    Dynamics,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::Selfenergy => "selfenergy",
            Command::Decay => "decay",
            Command::Sweep => "sweep",
            Command::Boundstate => "boundstate",
            Command::Spinmodel => "spinmodel",
            Command::Floquet => "floquet",
            Command::Dynamics => "dynamics",
        }
    }
}

/// Energy unit of every number in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Units {
    /// Energies are multiples of `J_AA` (so `lattice.J_AA` is 1), times multiples of `1/J_AA`.
    #[default]
    #[serde(rename = "J_AA")]
    JAa,
    /// Numbers are used as written, in whatever unit the caller chose.
    #[serde(rename = "absolute")]
    Absolute,
}

impl Units {
    pub fn energy(self) -> &'static str {
        match self {
            Units::JAa => "J_AA",
            Units::Absolute => "energy",
        }
    }

    pub fn time(self) -> &'static str {
        match self {
            Units::JAa => "1/J_AA",
            Units::Absolute => "1/energy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Either explicit values or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Grid {
    Values { values: Vec<f64> },
    Range { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Grid::Values { values } => values.clone(),
            Grid::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }

    fn check(&self, name: &str) -> Result<(), CliError> {
        let ok = match self {
            Grid::Values { values } => values.iter().all(|v| v.is_finite()),
            Grid::Range { start, stop, .. } => start.is_finite() && stop.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::Config(format!("grid `{name}` has non-finite entries")))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Grid>,
}

/// Command-specific settings; each command reads the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sublattice: Option<Sublattice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Bare detuning for bound-state and spin-model runs without emitters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Imaginary offset for self-energy curves; 0 takes the exact real-axis limit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<RatioKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reband: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Emitter indices of a closed loop.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validate_exchange: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circuit: Option<ParametricPairConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub units: Units,
    pub lattice: LatticeParams,
    #[serde(default, skip_serializing_if = "EmitterArrangement::is_empty")]
    pub emitters: EmitterArrangement,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub options: Options,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        raw.prepared()
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Re-checks every physical constraint and folds `phi`.
    pub fn prepared(mut self) -> Result<Self, CliError> {
        let cfg = |e: sawtooth_core::SawtoothError| CliError::Config(e.to_string());
        if self.units == Units::JAa && self.lattice.j_aa != 1.0 {
            return Err(CliError::Config(format!(
                "units J_AA need lattice.J_AA = 1, got {}; use \"units\": \"absolute\" otherwise",
                self.lattice.j_aa
            )));
        }
        self.lattice = self.lattice.normalized().map_err(cfg)?;
        self.lattice.validate_finite().map_err(cfg)?;
        self.emitters.validate(self.lattice.n_cells).map_err(cfg)?;
        for (name, g) in [
            ("delta", &self.grids.delta),
            ("phi", &self.grids.phi),
            ("k", &self.grids.k),
            ("t", &self.grids.t),
        ] {
            if let Some(g) = g {
                g.check(name)?;
            }
        }
        if let Some(t) = &self.grids.t {
            let pts = t.points();
            if pts.windows(2).any(|w| w[1] < w[0]) || pts.iter().any(|&v| v < 0.0) {
                return Err(CliError::Config("time grid must be non-negative and non-decreasing".into()));
            }
        }
        for (name, v) in [("g", self.options.g), ("delta", self.options.delta), ("eta", self.options.eta)] {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(CliError::Config(format!("option `{name}` must be finite")));
            }
        }
        if self.options.eta.is_some_and(|x| x < 0.0) {
            return Err(CliError::Config("option `eta` must be non-negative".into()));
        }
        if let Some(c) = &self.options.circuit {
            c.validate().map_err(cfg)?;
        }
        self.check_required()?;
        Ok(self)
    }

    fn check_required(&self) -> Result<(), CliError> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Config(format!("command `{}` needs {what}", self.command.name())))
            }
        };
        let g = &self.grids;
        let o = &self.options;
        match self.command {
            Command::Bands => need(g.k.is_some(), "grids.k"),
            Command::Selfenergy => need(g.delta.is_some() && o.g.is_some(), "grids.delta and options.g"),
            Command::Decay => need(
                g.delta.is_some() && o.sublattice.is_some() && o.g.is_some(),
                "grids.delta, options.sublattice and options.g",
            ),
            Command::Sweep => need(
                g.delta.is_some() && g.phi.is_some() && o.sublattice.is_some() && o.g.is_some(),
                "grids.delta, grids.phi, options.sublattice and options.g",
            ),
            Command::Boundstate => need(
                o.sublattice.is_some() && o.g.is_some() && o.delta.is_some(),
                "options.sublattice, options.g and options.delta",
            ),
            Command::Spinmodel => need(self.emitters.len() >= 2, "at least two emitters"),
            Command::Floquet => need(o.circuit.is_some(), "options.circuit"),
            Command::Dynamics => {
                need(!self.emitters.is_empty(), "at least one emitter")?;
                need(g.t.is_some(), "grids.t")
            }
        }
    }

    /// Canonical serialization used for the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sublattice(&self) -> Sublattice {
        self.options.sublattice.unwrap_or(Sublattice::B)
    }

    pub fn lattice_at_phi(&self, phi: f64) -> Result<LatticeParams, CliError> {
        LatticeParams { phi, ..self.lattice }
            .normalized()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}
