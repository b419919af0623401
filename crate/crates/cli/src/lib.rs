//! Command-line front end: run configurations, command dispatch and dataset export.

pub mod config;
pub mod dataset;
pub mod error;
pub mod run;

pub use config::{Command, Format, RunConfig};
pub use dataset::{Dataset, Table};
pub use error::CliError;
pub use run::run;
