use sawtooth_core::SawtoothError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] SawtoothError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Machine-readable failure written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
        };
        ErrorRecord {
            kind,
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}
