//! Runs the configured solvers and collects convergence records and the
//! summary document.

use mnlqr::{
    average_cost, policy_iteration, run_online_learning, ControlGain, Error as ModelError,
    LearningResult,
};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const METHOD_MODEL_BASED: &str = "model-based";
pub const METHOD_MODEL_FREE: &str = "model-free";

/// Tolerance and iteration cap of the policy-iteration run that supplies
/// `(P*, L*, λ*)` for the error columns.
pub const REFERENCE_TOL: f64 = 1e-10;
pub const REFERENCE_MAX_ITER: usize = 1000;

/// A seed counts as within bounds when `‖L̂ − L*‖_F ≤ GAIN_BALL` and
/// `|λ̂ − λ*| / λ* ≤ COST_BAND`.
pub const GAIN_BALL: f64 = 0.05;
pub const COST_BAND: f64 = 0.02;

/// One row of `convergence.csv`. `gain_error` and `lambda` describe the
/// same policy: the gain evaluated at iteration `tau`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub method: String,
    pub seed: u64,
    pub tau: usize,
    pub gain_error: f64,
    pub rel_cost_error: f64,
    pub lambda: f64,
}

type Rows = Vec<Vec<f64>>;

fn rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSummary {
    #[serde(rename = "P")]
    pub p: Rows,
    #[serde(rename = "L")]
    pub l: Rows,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelBasedSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_gain: Rows,
    pub final_kernel: Rows,
    pub lambda: f64,
    pub gain_error: f64,
    pub rel_cost_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedFailure {
    pub iteration: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    /// `L̂`
    pub final_gain: Option<Rows>,
    /// Last estimated Q kernel `H`.
    pub final_kernel: Option<Rows>,
    /// `λ̂`
    pub lambda: Option<f64>,
    pub gain_error: Option<f64>,
    pub rel_cost_error: Option<f64>,
    pub within_bounds: bool,
    pub skipped_updates: usize,
    pub error: Option<SeedFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFreeSummary {
    pub cost_mode: String,
    pub solver: String,
    pub gain_ball: f64,
    pub cost_band: f64,
    pub seeds_run: usize,
    pub seeds_failed: usize,
    pub seeds_within_bounds: usize,
    pub runs: Vec<SeedSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: String,
    pub reference: ReferenceSummary,
    pub model_based: Option<ModelBasedSummary>,
    pub model_free: Option<ModelFreeSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    /// Sorted by `(method, seed, tau)`.
    pub records: Vec<ConvergenceRecord>,
    pub summary: Summary,
}

impl ExperimentOutcome {
    /// One diagnostic line per failed learner seed.
    pub fn failures(&self) -> Vec<CliError> {
        let Some(mf) = &self.summary.model_free else {
            return Vec::new();
        };
        mf.runs
            .iter()
            .filter_map(|run| {
                run.error.as_ref().map(|e| CliError::Run {
                    method: METHOD_MODEL_FREE.into(),
                    seed: Some(run.seed),
                    iteration: e.iteration,
                    message: e.message.clone(),
                })
            })
            .collect()
    }
}

struct Reference {
    gain: DMatrix<f64>,
    lambda: f64,
}

impl Reference {
    fn gain_error(&self, gain: &ControlGain<f64>) -> f64 {
        (gain.matrix() - &self.gain).norm()
    }

    fn rel_cost_error(&self, lambda: f64) -> f64 {
        (lambda - self.lambda).abs() / self.lambda.abs()
    }
}

fn split_iteration(err: ModelError) -> (Option<usize>, String) {
    match err {
        ModelError::AtIteration { iteration, source } => (Some(iteration), source.to_string()),
        other => (None, other.to_string()),
    }
}

fn run_error(method: &str, seed: Option<u64>, err: ModelError) -> CliError {
    let (iteration, message) = split_iteration(err);
    CliError::Run {
        method: method.into(),
        seed,
        iteration,
        message,
    }
}

fn learner_records(
    seed: u64,
    result: &LearningResult<f64>,
    reference: &Reference,
) -> Vec<ConvergenceRecord> {
    result
        .lambdas
        .iter()
        .enumerate()
        .map(|(tau, &lambda)| ConvergenceRecord {
            method: METHOD_MODEL_FREE.into(),
            seed,
            tau,
            gain_error: reference.gain_error(&result.gains[tau]),
            rel_cost_error: reference.rel_cost_error(lambda),
            lambda,
        })
        .collect()
}

/// Runs every solver selected by `config.mode`. Learner failures are
/// recorded per seed in the summary (see [`ExperimentOutcome::failures`]);
/// model-based failures abort.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, CliError> {
    config.validate()?;
    let (model, cost) = (&config.model, &config.cost);
    let (n, m) = (model.state_dim(), model.input_dim());

    let start = config
        .pi
        .as_ref()
        .map(|p| p.initial_gain.clone())
        .or_else(|| config.learner.as_ref().map(|l| l.initial_gain.clone()))
        .unwrap_or_else(|| ControlGain::zeros(m, n));
    let ref_trace = policy_iteration(model, cost, &start, REFERENCE_TOL, REFERENCE_MAX_ITER)
        .map_err(|e| run_error("reference", None, e))?;
    let ref_kernel = ref_trace.final_kernel();
    let reference = Reference {
        gain: ref_trace.final_gain().matrix().clone(),
        lambda: average_cost(ref_kernel, &model.d).map_err(|e| run_error("reference", None, e))?,
    };
    let reference_summary = ReferenceSummary {
        p: rows(ref_kernel.matrix()),
        l: rows(&reference.gain),
        lambda: reference.lambda,
        iterations: ref_trace.iterations,
        converged: ref_trace.converged,
    };

    let mut records = Vec::new();

    let model_based = match (&config.pi, config.mode.model_based()) {
        (Some(pi), true) => {
            let trace = policy_iteration(model, cost, &pi.initial_gain, pi.tol, pi.max_iter)
                .map_err(|e| run_error(METHOD_MODEL_BASED, None, e))?;
            for (tau, &lambda) in trace.costs.iter().enumerate() {
                records.push(ConvergenceRecord {
                    method: METHOD_MODEL_BASED.into(),
                    seed: 0,
                    tau,
                    gain_error: reference.gain_error(&trace.gains[tau]),
                    rel_cost_error: reference.rel_cost_error(lambda),
                    lambda,
                });
            }
            let lambda = trace.final_cost();
            Some(ModelBasedSummary {
                iterations: trace.iterations,
                converged: trace.converged,
                final_gain: rows(trace.final_gain().matrix()),
                final_kernel: rows(trace.final_kernel().matrix()),
                lambda,
                gain_error: reference.gain_error(trace.final_gain()),
                rel_cost_error: reference.rel_cost_error(lambda),
            })
        }
        _ => None,
    };

    let model_free = match (&config.learner, config.mode.model_free()) {
        (Some(template), true) => {
            let runs: Vec<(SeedSummary, Vec<ConvergenceRecord>)> = config
                .seeds
                .par_iter()
                .map(|&seed| {
                    let learner = template.clone().with_seed(seed);
                    match run_online_learning(model, cost, &learner) {
                        Ok(result) => {
                            let final_gain = result.final_gain();
                            let lambda = result.final_lambda().expect("at least one iteration");
                            let gain_error = reference.gain_error(final_gain);
                            let rel_cost_error = reference.rel_cost_error(lambda);
                            let summary = SeedSummary {
                                seed,
                                converged: result.converged,
                                iterations: result.iterations,
                                final_gain: Some(rows(final_gain.matrix())),
                                final_kernel: result.kernels.last().map(|h| rows(h.matrix())),
                                lambda: Some(lambda),
                                gain_error: Some(gain_error),
                                rel_cost_error: Some(rel_cost_error),
                                within_bounds: gain_error <= GAIN_BALL
                                    && rel_cost_error <= COST_BAND,
                                skipped_updates: result.skipped_updates,
                                error: None,
                            };
                            (summary, learner_records(seed, &result, &reference))
                        }
                        Err(e) => {
                            let (iteration, message) = split_iteration(e);
                            let summary = SeedSummary {
                                seed,
                                converged: false,
                                iterations: iteration.map_or(0, |i| i + 1),
                                final_gain: None,
                                final_kernel: None,
                                lambda: None,
                                gain_error: None,
                                rel_cost_error: None,
                                within_bounds: false,
                                skipped_updates: 0,
                                error: Some(SeedFailure { iteration, message }),
                            };
                            (summary, Vec::new())
                        }
                    }
                })
                .collect();
            let mut summaries = Vec::with_capacity(runs.len());
            for (summary, seed_records) in runs {
                summaries.push(summary);
                records.extend(seed_records);
            }
            summaries.sort_by_key(|s| s.seed);
            Some(ModelFreeSummary {
                cost_mode: template.cost_mode.name().into(),
                solver: crate::config::solver_name(template.solver).into(),
                gain_ball: GAIN_BALL,
                cost_band: COST_BAND,
                seeds_run: summaries.len(),
                seeds_failed: summaries.iter().filter(|s| s.error.is_some()).count(),
                seeds_within_bounds: summaries.iter().filter(|s| s.within_bounds).count(),
                runs: summaries,
            })
        }
        _ => None,
    };

    records.sort_by(|a, b| (&a.method, a.seed, a.tau).cmp(&(&b.method, b.seed, b.tau)));
    Ok(ExperimentOutcome {
        records,
        summary: Summary {
            mode: config.mode.name().into(),
            reference: reference_summary,
            model_based,
            model_free,
        },
    })
}
