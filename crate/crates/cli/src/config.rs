//! Experiment configuration: a TOML document with `model`, `cost`, `pi`,
//! `learner` and `output` sections.
//!
//! ```toml
//! mode = "both"                # model-based | model-free | both
//! seeds = [0, 1, 2]
//!
//! [model]
//! A = [[0.9]]                  # row-major nested arrays
//! B = [[1.0]]
//! D = [[1.0]]
//! X0 = [[1.0]]
//! state_noise = [{ matrix = [[1.0]], variance = 0.1 }]
//! input_noise = []
//!
//! [cost]
//! Q = [[1.0]]
//! R = [[1.0]]
//!
//! [pi]                         # required for model-based runs
//! tol = 1e-9
//! max_iter = 100
//!
//! [learner]                    # required for model-free runs
//! rollout_length = 42000
//! probe_var = 0.64
//! varpi = 1e8
//! tau_max = 10
//! epsilon = 0.05
//! cost_mode = "known-d"        # known-d | empirical-lambda | sample-mean-lambda
//! solver = "rls"               # rls | batch
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Omitted `pi`/`learner` fields take the defaults shown; both sections
//! accept an optional `initial_gain` (zero when absent).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mnlqr::{
    ControlGain, CostMode, CostModel, Error as ModelError, LearnerConfig, Solver, SymMatrix,
    SystemModel,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_PI_TOL: f64 = 1e-9;
pub const DEFAULT_PI_MAX_ITER: usize = 100;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    ModelBased,
    ModelFree,
    Both,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::ModelBased => "model-based",
            Mode::ModelFree => "model-free",
            Mode::Both => "both",
        }
    }

    pub fn model_based(self) -> bool {
        matches!(self, Mode::ModelBased | Mode::Both)
    }

    pub fn model_free(self) -> bool {
        matches!(self, Mode::ModelFree | Mode::Both)
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "model-based" => Ok(Mode::ModelBased),
            "model-free" => Ok(Mode::ModelFree),
            "both" => Ok(Mode::Both),
            other => Err(format!(
                "unknown mode `{other}` (expected model-based, model-free or both)"
            )),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub initial_gain: ControlGain<f64>,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: SystemModel<f64>,
    pub cost: CostModel<f64>,
    pub mode: Mode,
    pub pi: Option<PiSettings>,
    /// Template for every seed; `seed` is overwritten per run.
    pub learner: Option<LearnerConfig<f64>>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Re-checks the mode/section/seed invariants after overrides.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.mode.model_based() && self.pi.is_none() {
            return Err(CliError::missing("pi"));
        }
        if self.mode.model_free() {
            if self.learner.is_none() {
                return Err(CliError::missing("learner"));
            }
            if self.seeds.is_empty() {
                return Err(CliError::invalid(
                    "seeds",
                    "model-free runs need at least one seed",
                ));
            }
        }
        Ok(())
    }
}

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<String>,
    seeds: Option<Vec<u64>>,
    model: Option<RawModel>,
    cost: Option<RawCost>,
    pi: Option<RawPi>,
    learner: Option<RawLearner>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "A")]
    a: Option<Rows>,
    #[serde(rename = "B")]
    b: Option<Rows>,
    #[serde(rename = "D")]
    d: Option<Rows>,
    #[serde(rename = "X0")]
    x0: Option<Rows>,
    #[serde(default)]
    state_noise: Vec<RawChannel>,
    #[serde(default)]
    input_noise: Vec<RawChannel>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    matrix: Option<Rows>,
    variance: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    #[serde(rename = "Q")]
    q: Option<Rows>,
    #[serde(rename = "R")]
    r: Option<Rows>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPi {
    tol: Option<f64>,
    max_iter: Option<usize>,
    initial_gain: Option<Rows>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLearner {
    rollout_length: Option<usize>,
    probe_var: Option<f64>,
    varpi: Option<f64>,
    tau_max: Option<usize>,
    epsilon: Option<f64>,
    cost_mode: Option<String>,
    solver: Option<String>,
    initial_gain: Option<Rows>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
}

fn required<T>(value: Option<T>, field: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::missing(field))
}

fn matrix(rows: Rows, field: &str) -> Result<DMatrix<f64>, CliError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(CliError::invalid(
            field,
            "matrix must have at least one row and one column",
        ));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(CliError::invalid(
            field,
            format!("row {i} has {} entries, expected {ncols}", row.len()),
        ));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::invalid(field, "entries must be finite"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn symmetric(rows: Rows, field: &str) -> Result<SymMatrix<f64>, CliError> {
    let m = matrix(rows, field)?;
    if !m.is_square() {
        return Err(CliError::invalid(
            field,
            format!(
                "expected a square matrix, found {}x{}",
                m.nrows(),
                m.ncols()
            ),
        ));
    }
    SymMatrix::new(m).map_err(|e| CliError::invalid(field, e.to_string()))
}

fn gain(rows: Option<Rows>, field: &str, m: usize, n: usize) -> Result<ControlGain<f64>, CliError> {
    let Some(rows) = rows else {
        return Ok(ControlGain::zeros(m, n));
    };
    let l = matrix(rows, field)?;
    if l.shape() != (m, n) {
        return Err(CliError::invalid(
            field,
            format!("expected {m}x{n}, found {}x{}", l.nrows(), l.ncols()),
        ));
    }
    Ok(ControlGain::new(l))
}

/// Maps a model validation error to the config field it came from.
fn model_field(err: &ModelError) -> String {
    let channel = |name: &str| -> Option<String> {
        let (kind, idx) = name.split_once('_')?;
        let idx: usize = idx.parse().ok()?;
        let list = match kind {
            "A" | "alpha" => "state_noise",
            "B" | "beta" => "input_noise",
            _ => return None,
        };
        Some(format!("model.{list}[{}]", idx - 1))
    };
    match err {
        ModelError::Dimension { what, .. } => match what.as_str() {
            "A" | "B" | "D" | "X0" => format!("model.{what}"),
            "Q" | "R" => format!("cost.{what}"),
            other => channel(other).map_or_else(|| "model".into(), |c| format!("{c}.matrix")),
        },
        ModelError::NegativeVariance { channel: c, .. } => {
            channel(c).map_or_else(|| "model".into(), |c| format!("{c}.variance"))
        }
        ModelError::AdditiveNoiseNotPositiveDefinite { .. } => "model.D".into(),
        ModelError::InitialCovarianceIndefinite { .. } => "model.X0".into(),
        ModelError::InputWeightNotPositiveDefinite { .. } => "cost.R".into(),
        ModelError::StateWeightIndefinite { .. } => "cost.Q".into(),
        _ => "model".into(),
    }
}

fn build_model(raw: RawModel) -> Result<SystemModel<f64>, CliError> {
    let a = matrix(required(raw.a, "model.A")?, "model.A")?;
    let b = matrix(required(raw.b, "model.B")?, "model.B")?;
    let d = symmetric(required(raw.d, "model.D")?, "model.D")?;
    let x0 = symmetric(required(raw.x0, "model.X0")?, "model.X0")?;
    let mut model = SystemModel::new(a, b, d, x0);
    for (list, channels) in [
        ("state_noise", raw.state_noise),
        ("input_noise", raw.input_noise),
    ] {
        for (i, ch) in channels.into_iter().enumerate() {
            let field = format!("model.{list}[{i}]");
            let m = matrix(
                required(ch.matrix, &format!("{field}.matrix"))?,
                &format!("{field}.matrix"),
            )?;
            let var = required(ch.variance, &format!("{field}.variance"))?;
            model = if list == "state_noise" {
                model.with_state_noise(m, var)
            } else {
                model.with_input_noise(m, var)
            };
        }
    }
    Ok(model)
}

fn parse_cost_mode(name: &str, model: &SystemModel<f64>) -> Result<CostMode<f64>, CliError> {
    match name {
        "known-d" => Ok(CostMode::KnownD(model.d.clone())),
        "empirical-lambda" => Ok(CostMode::EmpiricalLambda),
        "sample-mean-lambda" => Ok(CostMode::SampleMeanLambda),
        other => Err(CliError::invalid(
            "learner.cost_mode",
            format!("unknown cost mode `{other}` (expected known-d, empirical-lambda or sample-mean-lambda)"),
        )),
    }
}

fn parse_solver(name: &str) -> Result<Solver, CliError> {
    match name {
        "rls" => Ok(Solver::Rls),
        "batch" => Ok(Solver::Batch),
        other => Err(CliError::invalid(
            "learner.solver",
            format!("unknown solver `{other}` (expected rls or batch)"),
        )),
    }
}

pub fn solver_name(solver: Solver) -> &'static str {
    match solver {
        Solver::Rls => "rls",
        Solver::Batch => "batch",
    }
}

fn build_learner(
    raw: RawLearner,
    model: &SystemModel<f64>,
) -> Result<LearnerConfig<f64>, CliError> {
    let (n, m) = (model.state_dim(), model.input_dim());
    let initial = gain(raw.initial_gain, "learner.initial_gain", m, n)?;
    let mode = parse_cost_mode(raw.cost_mode.as_deref().unwrap_or("known-d"), model)?;
    let mut config = LearnerConfig::new(initial, mode);
    if let Some(v) = raw.rollout_length {
        config.rollout_length = v;
    }
    if let Some(v) = raw.probe_var {
        config.probe_var = v;
    }
    if let Some(v) = raw.varpi {
        config.varpi = v;
    }
    if let Some(v) = raw.tau_max {
        config.tau_max = v;
    }
    if let Some(v) = raw.epsilon {
        config.epsilon = v;
    }
    if let Some(s) = raw.solver {
        config.solver = parse_solver(&s)?;
    }
    config
        .validate(n, m)
        .map_err(|e| CliError::invalid("learner", e.to_string()))?;
    Ok(config)
}

fn build_pi(raw: RawPi, model: &SystemModel<f64>) -> Result<PiSettings, CliError> {
    let tol = raw.tol.unwrap_or(DEFAULT_PI_TOL);
    if !(tol > 0.0) {
        return Err(CliError::invalid("pi.tol", "must be positive"));
    }
    let max_iter = raw.max_iter.unwrap_or(DEFAULT_PI_MAX_ITER);
    if max_iter == 0 {
        return Err(CliError::invalid("pi.max_iter", "must be at least 1"));
    }
    Ok(PiSettings {
        tol,
        max_iter,
        initial_gain: gain(
            raw.initial_gain,
            "pi.initial_gain",
            model.input_dim(),
            model.state_dim(),
        )?,
    })
}

/// Parses and validates a config document. `origin` names it in errors.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse {
        origin: origin.to_string(),
        message: e.to_string(),
    })?;
    let model = build_model(required(raw.model, "model")?)?;
    let raw_cost = required(raw.cost, "cost")?;
    let q = symmetric(required(raw_cost.q, "cost.Q")?, "cost.Q")?;
    let r = symmetric(required(raw_cost.r, "cost.R")?, "cost.R")?;
    let cost = CostModel::new(q, r);
    mnlqr::validate(&model, &cost)
        .map_err(|e| CliError::invalid(model_field(&e), e.to_string()))?;

    let mode = match raw.mode {
        Some(s) => s
            .parse()
            .map_err(|e: String| CliError::invalid("mode", e))?,
        None => Mode::Both,
    };
    let pi = raw.pi.map(|p| build_pi(p, &model)).transpose()?;
    let learner = raw.learner.map(|l| build_learner(l, &model)).transpose()?;
    let config = ExperimentConfig {
        model,
        cost,
        mode,
        pi,
        learner,
        seeds: raw.seeds.unwrap_or_default(),
        output_dir: PathBuf::from(
            raw.output
                .and_then(|o| o.dir)
                .unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into()),
        ),
    };
    config.validate()?;
    Ok(config)
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text, &path.display().to_string())
}

fn rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Canonical TOML for `config`, with every field spelled out.
/// [`parse_config`] of the result equals `config`.
pub fn to_canonical_toml(config: &ExperimentConfig) -> String {
    let channels = |list: &[mnlqr::NoiseChannel<f64>]| {
        list.iter()
            .map(|ch| RawChannel {
                matrix: Some(rows(&ch.matrix)),
                variance: Some(ch.variance),
            })
            .collect()
    };
    let raw = RawConfig {
        mode: Some(config.mode.name().into()),
        seeds: Some(config.seeds.clone()),
        model: Some(RawModel {
            a: Some(rows(&config.model.a)),
            b: Some(rows(&config.model.b)),
            d: Some(rows(config.model.d.matrix())),
            x0: Some(rows(config.model.x0.matrix())),
            state_noise: channels(&config.model.state_noise),
            input_noise: channels(&config.model.input_noise),
        }),
        cost: Some(RawCost {
            q: Some(rows(config.cost.q.matrix())),
            r: Some(rows(config.cost.r.matrix())),
        }),
        pi: config.pi.as_ref().map(|p| RawPi {
            tol: Some(p.tol),
            max_iter: Some(p.max_iter),
            initial_gain: Some(rows(p.initial_gain.matrix())),
        }),
        learner: config.learner.as_ref().map(|l| RawLearner {
            rollout_length: Some(l.rollout_length),
            probe_var: Some(l.probe_var),
            varpi: Some(l.varpi),
            tau_max: Some(l.tau_max),
            epsilon: Some(l.epsilon),
            cost_mode: Some(l.cost_mode.name().into()),
            solver: Some(solver_name(l.solver).into()),
            initial_gain: Some(rows(l.initial_gain.matrix())),
        }),
        output: Some(RawOutput {
            dir: Some(config.output_dir.display().to_string()),
        }),
    };
    toml::to_string(&raw).expect("config serializes")
}

/// Shipped fixtures: `(name, description, document)`.
pub const FIXTURES: &[(&str, &str, &str)] = &[
    (
        "example_sec6",
        "3-state, 3-input plant with two state and two input noise channels",
        include_str!("../fixtures/example_sec6.toml"),
    ),
    (
        "scalar_smoke",
        "scalar plant x+ = (0.9 + a) x + u + d, var(a) = 0.1",
        include_str!("../fixtures/scalar_smoke.toml"),
    ),
];

pub fn fixture(name: &str) -> Option<&'static str> {
    FIXTURES
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, _, text)| *text)
}

/// Loads `name_or_path` as a file path, or as a shipped fixture name when no such
/// file exists.
pub fn resolve_config(name_or_path: &str) -> Result<ExperimentConfig, CliError> {
    let path = Path::new(name_or_path);
    if path.exists() {
        return load_config(path);
    }
    match fixture(name_or_path) {
        Some(text) => parse_config(text, name_or_path),
        None => Err(CliError::Io {
            path: path.to_path_buf(),
            message: "no such file or shipped fixture".into(),
        }),
    }
}
