use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{resolve_config, to_canonical_toml, ExperimentConfig, Mode, FIXTURES};
use crate::error::{CliError, EXIT_RUN};
use crate::experiment::{run_experiment, ExperimentOutcome};
use crate::output::write_artifacts;

/// Overrides the configured output directory; `--out` wins over it.
pub const OUT_DIR_ENV: &str = "MNLQR_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "mnlqr",
    version,
    about = "Average-cost LQR with multiplicative noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured solvers and write convergence.csv and summary.json.
    Run {
        /// Config file, or the name of a shipped fixture.
        #[arg(long, short)]
        config: String,
        /// model-based, model-free or both.
        #[arg(long)]
        mode: Option<Mode>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated learner seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Validate a config and print it in canonical form.
    Check {
        #[arg(long, short)]
        config: String,
    },
    /// List the shipped fixtures.
    Fixtures,
}

fn apply_overrides(
    mut config: ExperimentConfig,
    mode: Option<Mode>,
    out: Option<PathBuf>,
    seeds: Option<Vec<u64>>,
) -> Result<ExperimentConfig, CliError> {
    if let Some(mode) = mode {
        config.mode = mode;
    }
    if let Some(seeds) = seeds {
        config.seeds = seeds;
    }
    if let Some(dir) = out.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)) {
        config.output_dir = dir;
    }
    config.validate()?;
    Ok(config)
}

fn report(outcome: &ExperimentOutcome) {
    let s = &outcome.summary;
    println!("reference lambda* = {:.6}", s.reference.lambda);
    if let Some(mb) = &s.model_based {
        println!(
            "model-based: {} iterations, converged = {}, lambda = {:.6}, gain error = {:.3e}",
            mb.iterations, mb.converged, mb.lambda, mb.gain_error
        );
    }
    if let Some(mf) = &s.model_free {
        for run in &mf.runs {
            match (&run.error, run.gain_error, run.rel_cost_error) {
                (None, Some(ge), Some(ce)) => println!(
                    "model-free seed {}: {} iterations, converged = {}, gain error = {:.3e}, cost error = {:.3e}",
                    run.seed, run.iterations, run.converged, ge, ce
                ),
                _ => println!("model-free seed {}: failed", run.seed),
            }
        }
        println!(
            "model-free: {}/{} seeds within gain {} and cost {}",
            mf.seeds_within_bounds, mf.seeds_run, mf.gain_ball, mf.cost_band
        );
    }
}

fn run(config: ExperimentConfig) -> Result<i32, CliError> {
    let outcome = run_experiment(&config)?;
    report(&outcome);
    let (csv, summary) = write_artifacts(&outcome, &config.output_dir)?;
    println!("wrote {} and {}", csv.display(), summary.display());
    let failures = outcome.failures();
    for failure in &failures {
        eprintln!("error: {failure}");
    }
    Ok(if failures.is_empty() { 0 } else { EXIT_RUN })
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Run {
            config,
            mode,
            out,
            seeds,
        } => {
            let config =
                apply_overrides(resolve_config(config)?, *mode, out.clone(), seeds.clone())?;
            run(config)
        }
        Command::Check { config } => {
            let config = resolve_config(config)?;
            print!("{}", to_canonical_toml(&config));
            Ok(0)
        }
        Command::Fixtures => {
            for (name, description, _) in FIXTURES {
                println!("{name}\t{description}");
            }
            Ok(0)
        }
    }
}

/// Runs `cli` and returns the process exit status: 0 on success, 1 for
/// config errors, 2 for solver, learner or output failures.
pub fn execute(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
