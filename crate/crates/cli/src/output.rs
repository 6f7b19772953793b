use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::experiment::{ConvergenceRecord, ExperimentOutcome, Summary};

pub const CSV_FILE: &str = "convergence.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CSV_HEADER: [&str; 6] = [
    "method",
    "seed",
    "tau",
    "gain_error",
    "rel_cost_error",
    "lambda",
];

fn output_error(path: &Path, err: impl ToString) -> CliError {
    CliError::Output {
        path: path.to_path_buf(),
        message: err.to_string(),
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
fn full_precision(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `records` in the given order under a fixed header.
pub fn emit_convergence_csv(records: &[ConvergenceRecord], path: &Path) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    writer
        .write_record(CSV_HEADER)
        .map_err(|e| output_error(path, e))?;
    for r in records {
        writer
            .write_record([
                r.method.clone(),
                r.seed.to_string(),
                r.tau.to_string(),
                full_precision(r.gain_error),
                full_precision(r.rel_cost_error),
                full_precision(r.lambda),
            ])
            .map_err(|e| output_error(path, e))?;
    }
    writer.flush().map_err(|e| output_error(path, e))
}

pub fn emit_summary(summary: &Summary, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| output_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| output_error(path, e))
}

/// Creates `dir` and writes `convergence.csv` and `summary.json` into it.
/// Returns the two paths.
pub fn write_artifacts(
    outcome: &ExperimentOutcome,
    dir: &Path,
) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
    let csv_path = dir.join(CSV_FILE);
    let summary_path = dir.join(SUMMARY_FILE);
    emit_convergence_csv(&outcome.records, &csv_path)?;
    emit_summary(&outcome.summary, &summary_path)?;
    Ok((csv_path, summary_path))
}
