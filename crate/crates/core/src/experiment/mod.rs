//! Experiment runs: configuration, built-in presets and output files.

pub mod config;
pub mod presets;
mod runner;

use thiserror::Error;

pub use config::{Mode, RunConfig};
pub use runner::{bubble_records, run, table, RunSummary, TableRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{module} failed: {message}")]
    Numerical {
        module: &'static str,
        message: String,
    },
    #[error("cannot access `{path}`: {reason}")]
    Io { path: String, reason: String },
}

impl ExperimentError {
    /// Process exit status for this error: 1 for configuration and file
    /// problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config { .. } | ExperimentError::Io { .. } => 1,
            ExperimentError::Numerical { .. } => 2,
        }
    }
}
