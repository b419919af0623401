use thiserror::Error;

/// Failure modes shared by every analysis in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SawtoothError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bands touch at k = {k}; dispersion is not differentiable there")]
    DegenerateDispersion { k: f64 },

    #[error("energy {delta} sits on a band edge (tangent root at k = {k})")]
    Tangency { delta: f64, k: f64 },

    #[error("rebanding requires |phi| = pi/2, got phi = {phi}")]
    NotAtCrossing { phi: f64 },

    #[error("pole quadratic degenerates at z = {re} + {im}i")]
    DegeneratePoles { re: f64, im: f64 },

    #[error("energy {delta} is at a band edge; self-energy diverges towards {divergence_sign:+}inf")]
    BandEdge { delta: f64, divergence_sign: f64 },

    #[error("energy {delta} lies outside every band")]
    NotInBand { delta: f64 },

    #[error("detuning {delta} is inside a band; bath-mediated couplings are not defined there")]
    MarkovInvalid { delta: f64 },

    #[error("emitter {index}: site {site} outside a lattice of {n_cells} cells")]
    SiteOutOfRange { index: usize, site: usize, n_cells: usize },

    #[error("emitters {first} and {second} share the same lattice site")]
    DuplicateEmitter { first: usize, second: usize },

    #[error("norm drift {drift:e} at t = {t} exceeds tolerance")]
    NormDrift { t: f64, drift: f64 },

    #[error("population outside the exclusion window is {total:e}; fractions undefined")]
    UndefinedFraction { total: f64 },

    #[error("exponential fit residual {residual:e} too large")]
    FitQuality { residual: f64 },

    #[error("broken link between path entries {from} and {to} (|J| = {magnitude:e})")]
    BrokenLink { from: usize, to: usize, magnitude: f64 },

    #[error("emitters must share a common detuning ({first} vs {other})")]
    UnequalDetunings { first: f64, other: f64 },

    #[error("integrator failed: {0}")]
    Integrator(String),
}

pub type Result<T> = std::result::Result<T, SawtoothError>;

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Warning {
    /// Markov prediction requested for a detuning outside every band.
    InGapMarkov { delta: f64 },
    /// Bound-state energy resolved within 1e-10 of a band edge.
    EdgePrecision { energy: f64, edge: f64 },
    /// Wavefunction window shorter than ten localization lengths.
    Truncation { window: usize, xi: f64 },
    /// Two-level fit of the parametric pair misses by more than 5%.
    RwaBreakdown { residual: f64 },
    /// Exchange oscillation loses more than 10% to the bath.
    BathLeakage { leakage: f64 },
    /// Parametric pair outside the weak-drive regime.
    StrongDrive { j_over_omega: f64, delta_over_omega: f64 },
    /// Directionality computed from roots on one side only.
    OneSided,
}
