use std::path::PathBuf;

use thiserror::Error;

/// Exit status for configuration problems.
pub const EXIT_CONFIG: i32 = 1;
/// Exit status for solver, learner or output failures.
pub const EXIT_RUN: i32 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("cannot read config {}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("cannot parse config {origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("config is missing required field `{field}`")]
    Missing { field: String },

    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("{method} run failed{}{}: {message}",
        seed.map(|s| format!(" for seed {s}")).unwrap_or_default(),
        iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    Run {
        method: String,
        seed: Option<u64>,
        iteration: Option<usize>,
        message: String,
    },

    #[error("cannot write {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
}

impl CliError {
    pub fn missing(field: impl Into<String>) -> Self {
        CliError::Missing {
            field: field.into(),
        }
    }

    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. }
            | CliError::Parse { .. }
            | CliError::Missing { .. }
            | CliError::Invalid { .. } => EXIT_CONFIG,
            CliError::Run { .. } | CliError::Output { .. } => EXIT_RUN,
        }
    }
}
