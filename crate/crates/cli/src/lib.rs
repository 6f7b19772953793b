//! Command-line harness for the `mnlqr` solvers: config loading, experiment
//! runs and CSV/JSON artifacts.

// `!(x > 0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use cli::{execute, Cli, Command, OUT_DIR_ENV};
pub use config::{
    load_config, parse_config, resolve_config, to_canonical_toml, ExperimentConfig, Mode,
    PiSettings,
};
pub use error::{CliError, EXIT_CONFIG, EXIT_RUN};
pub use experiment::{run_experiment, ConvergenceRecord, ExperimentOutcome, Summary};
pub use output::{emit_convergence_csv, emit_summary, write_artifacts};
