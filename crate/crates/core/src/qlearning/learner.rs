use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::system::{
    rollout, ControlGain, CostModel, Environment, SimulatedEnvironment, SystemModel,
};
use crate::SimRng;

use super::kernel::{policy_from_h, QKernel};
use super::regression::{estimate_kernel, CostMode, Estimator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Rls,
    Batch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig<T: Real> {
    /// Admissible starting gain `L⁽⁰⁾`.
    pub initial_gain: ControlGain<T>,
    /// Rollout length `N` per policy evaluation.
    pub rollout_length: usize,
    /// Probing variance `σ_u²`; `e_k ~ N(0, σ_u² I)`.
    pub probe_var: T,
    /// RLS initialization `ξ_0 = ϖ I`.
    pub varpi: T,
    /// Iterations run for `τ = 0..=tau_max`.
    pub tau_max: usize,
    /// Stop once `‖L⁽ᵗ⁺¹⁾ − L⁽ᵗ⁾‖_F < epsilon`.
    pub epsilon: T,
    pub seed: u64,
    pub cost_mode: CostMode<T>,
    pub solver: Solver,
}

impl<T: Real> LearnerConfig<T> {
    /// Defaults: `N = 42000`, `σ_u² = 0.64`, `ϖ = 1e8`, `tau_max = 10`,
    /// `ε = 0.05`, seed 0, RLS.
    pub fn new(initial_gain: ControlGain<T>, cost_mode: CostMode<T>) -> Self {
        Self {
            initial_gain,
            rollout_length: 42_000,
            probe_var: T::lit(0.64),
            varpi: T::lit(1e8),
            tau_max: 10,
            epsilon: T::lit(0.05),
            seed: 0,
            cost_mode,
            solver: Solver::Rls,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn estimator(&self) -> Estimator<T> {
        match self.solver {
            Solver::Rls => Estimator::Rls { varpi: self.varpi },
            Solver::Batch => Estimator::Batch,
        }
    }

    /// Number of regression unknowns for an `n`-state, `m`-input plant.
    pub fn unknowns(&self, n: usize, m: usize) -> usize {
        let extra = usize::from(matches!(self.cost_mode, CostMode::EmpiricalLambda));
        crate::packing::packed_len(n + m) + extra
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        self.initial_gain.check_dims(n, m)?;
        let need = self.unknowns(n, m);
        if self.rollout_length < need {
            return Err(Error::InvalidLearnerConfig(format!(
                "rollout length {} is below the {} regression unknowns",
                self.rollout_length, need
            )));
        }
        if !(self.varpi > T::zero()) {
            return Err(Error::InvalidLearnerConfig("varpi must be positive".into()));
        }
        if !(self.epsilon > T::zero()) {
            return Err(Error::InvalidLearnerConfig(
                "epsilon must be positive".into(),
            ));
        }
        if !(self.probe_var >= T::zero()) {
            return Err(Error::InvalidLearnerConfig(
                "probe variance must be non-negative".into(),
            ));
        }
        if let CostMode::KnownD(d) = &self.cost_mode {
            if d.dim() != n {
                return Err(Error::dimension("learner D", n, d.dim()));
            }
        }
        Ok(())
    }
}

/// Per-iteration output of [`learn`].
///
/// `gains[τ]` is the gain evaluated at iteration `τ` and `gains[τ + 1]` the
/// one improved from `kernels[τ]`; `lambdas[τ]` is the average-cost estimate
/// that came with `kernels[τ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningResult<T: Real> {
    pub gains: Vec<ControlGain<T>>,
    pub kernels: Vec<QKernel<T>>,
    pub lambdas: Vec<T>,
    pub converged: bool,
    pub iterations: usize,
    pub skipped_updates: usize,
}

impl<T: Real> LearningResult<T> {
    /// `L̂`, the last improved gain.
    pub fn final_gain(&self) -> &ControlGain<T> {
        self.gains.last().expect("at least the initial gain")
    }

    /// `λ̂`, the estimate from the last policy evaluation.
    pub fn final_lambda(&self) -> Option<T> {
        self.lambdas.last().copied()
    }
}

/// Model-free policy iteration on Q kernels.
///
/// Each iteration rolls out `N` steps under the current gain with probing
/// noise from a fresh initial state, fits `H` with the configured solver,
/// and improves the gain as `-H_uu⁻¹ H_ux`. Only the [`Environment`] sampling
/// interface is used. Errors carry the iteration index.
pub fn learn<T: Real, E: Environment<T>>(
    env: &mut E,
    config: &LearnerConfig<T>,
) -> Result<LearningResult<T>> {
    let (n, m) = (env.state_dim(), env.input_dim());
    config.validate(n, m)?;
    let mut rng = SimRng::seed_from_u64(config.seed);
    let estimator = config.estimator();

    let mut gain = config.initial_gain.clone();
    let mut result = LearningResult {
        gains: vec![gain.clone()],
        kernels: Vec::new(),
        lambdas: Vec::new(),
        converged: false,
        iterations: 0,
        skipped_updates: 0,
    };

    for tau in 0..=config.tau_max {
        let (est, next) = (|| -> Result<_> {
            let traj = rollout(
                env,
                &gain,
                config.rollout_length,
                config.probe_var,
                &mut rng,
                config.seed,
            )?;
            let est = estimate_kernel(&traj, &gain, &config.cost_mode, estimator)?;
            let next = policy_from_h(&est.kernel)?;
            Ok((est, next))
        })()
        .map_err(|e| e.at_iteration(tau))?;
        let change = next.distance(&gain);
        result.skipped_updates += est.skipped_updates;
        result.kernels.push(est.kernel);
        result.lambdas.push(est.lambda);
        result.gains.push(next.clone());
        result.iterations += 1;
        gain = next;
        if change < config.epsilon {
            result.converged = true;
            break;
        }
    }
    Ok(result)
}

/// [`learn`] against a simulated plant. The learner only sees the plant
/// through [`SimulatedEnvironment`].
pub fn run_online_learning<T: Real>(
    model: &SystemModel<T>,
    cost: &CostModel<T>,
    config: &LearnerConfig<T>,
) -> Result<LearningResult<T>> {
    let mut env = SimulatedEnvironment::new(model, cost)?;
    learn(&mut env, config)
}
