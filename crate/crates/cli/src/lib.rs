//! Command-line front end for the interferometer simulator: scenario
//! configuration files in, deterministic CSV tables and fit reports out.

pub mod config;
pub mod runner;

use thiserror::Error;

/// Everything the binary can fail with, keyed to its exit code: 1 for
/// configuration/input parsing, 2 for runtime failures, 3 for fits that do
/// not converge.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unit error at line {line}, column {col}: {message}")]
    UnitMismatch {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("invalid value: {message}")]
    Range { message: String },
    #[error("{message}")]
    Runtime { message: String },
    #[error("fit failed: {message}")]
    Fit { message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::UnitMismatch { .. } | CliError::Range { .. } => 1,
            CliError::Runtime { .. } => 2,
            CliError::Fit { .. } => 3,
        }
    }
}

impl From<debroglie::experiment::ExperimentError> for CliError {
    fn from(e: debroglie::experiment::ExperimentError) -> Self {
        CliError::Runtime {
            message: e.to_string(),
        }
    }
}

impl From<debroglie::analysis::AnalysisError> for CliError {
    fn from(e: debroglie::analysis::AnalysisError) -> Self {
        CliError::Fit {
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime {
            message: e.to_string(),
        }
    }
}
