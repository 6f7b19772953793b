//! Plant and cost models, the noisy one-step map and seeded closed-loop
//! rollouts.
//!
//! The plant is
//!
//! ```text
//! x_{k+1} = (A + Σ α_ik A_i) x_k + (B + Σ β_jk B_j) u_k + d_k
//! ```
//!
//! with scalar `α_ik ~ N(0, ᾱ_i)`, `β_jk ~ N(0, β̄_j)`, `d_k ~ N(0, D)`, all
//! mutually independent, and `x_0 ~ N(0, X0)`.
//!
//! # Random stream layout
//!
//! Every Gaussian draw is one `StandardNormal` `f64` from the caller's stream,
//! converted to the scalar type. A rollout consumes, in order:
//!
//! 1. `n` draws for `x_0`, mapped through a fixed factor of `X0`;
//! 2. per step: `m` draws for the probing noise `e_k` (always drawn, even when
//!    the probing variance is zero), then `p` draws for `α_1..α_p`, `q` draws
//!    for `β_1..β_q` and `n` draws for `d_k`.
//!
//! Covariances are factored with a lower Cholesky factor, falling back to
//! `V sqrt(Λ)` for singular positive semidefinite matrices.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::psd_factor;
use crate::packing::SymMatrix;
use crate::scalar::Real;
use crate::SimRng;

/// Smallest eigenvalue a matrix must exceed to count as positive definite.
pub const PD_THRESHOLD: f64 = 1e-12;

/// One multiplicative noise channel: a direction matrix scaled by a
/// zero-mean Gaussian scalar with the given variance.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChannel<T: Real> {
    pub matrix: DMatrix<T>,
    pub variance: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    /// `(A_i, ᾱ_i)`
    pub state_noise: Vec<NoiseChannel<T>>,
    /// `(B_j, β̄_j)`
    pub input_noise: Vec<NoiseChannel<T>>,
    /// Additive noise covariance `D`.
    pub d: SymMatrix<T>,
    /// Initial state covariance `X0`.
    pub x0: SymMatrix<T>,
    /// Lets `D` be singular (including zero) and skips the `D > 0` check.
    /// Only meant for deterministic tests.
    pub degenerate_noise: bool,
}

impl<T: Real> SystemModel<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, d: SymMatrix<T>, x0: SymMatrix<T>) -> Self {
        Self {
            a,
            b,
            state_noise: Vec::new(),
            input_noise: Vec::new(),
            d,
            x0,
            degenerate_noise: false,
        }
    }

    /// Noise-free plant `x+ = A x + B u` with `D = 0` and `X0 = 0`.
    pub fn deterministic(a: DMatrix<T>, b: DMatrix<T>) -> Self {
        let n = a.nrows().max(1);
        Self {
            degenerate_noise: true,
            ..Self::new(a, b, SymMatrix::zeros(n), SymMatrix::zeros(n))
        }
    }

    pub fn with_state_noise(mut self, matrix: DMatrix<T>, variance: T) -> Self {
        self.state_noise.push(NoiseChannel { matrix, variance });
        self
    }

    pub fn with_input_noise(mut self, matrix: DMatrix<T>, variance: T) -> Self {
        self.input_noise.push(NoiseChannel { matrix, variance });
        self
    }

    pub fn with_initial_covariance(mut self, x0: SymMatrix<T>) -> Self {
        self.x0 = x0;
        self
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostModel<T: Real> {
    pub q: SymMatrix<T>,
    pub r: SymMatrix<T>,
}

impl<T: Real> CostModel<T> {
    pub fn new(q: SymMatrix<T>, r: SymMatrix<T>) -> Self {
        Self { q, r }
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self::new(SymMatrix::identity(n), SymMatrix::identity(m))
    }
}

/// Linear state feedback `u = L x`, `L` is `m x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGain<T: Real>(pub DMatrix<T>);

impl<T: Real> ControlGain<T> {
    pub fn new(l: DMatrix<T>) -> Self {
        Self(l)
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self(DMatrix::zeros(m, n))
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.0
    }

    pub fn input_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.0.ncols()
    }

    /// Frobenius distance `‖self - other‖_F`.
    pub fn distance(&self, other: &ControlGain<T>) -> T {
        (&self.0 - &other.0).norm()
    }

    pub fn apply(&self, x: &DVector<T>) -> DVector<T> {
        &self.0 * x
    }

    pub(crate) fn check_dims(&self, n: usize, m: usize) -> Result<()> {
        if self.0.shape() != (m, n) {
            return Err(Error::dimension(
                "control gain L",
                format!("{m}x{n}"),
                format!("{}x{}", self.0.nrows(), self.0.ncols()),
            ));
        }
        Ok(())
    }
}

/// A closed-loop rollout of `N` steps.
///
/// `inputs[k]` for `k < N` is the input actually applied at step `k` (policy
/// plus probing noise) and `inputs[N] = L x_N`. `target_inputs[k] = L x_{k+1}`
/// is the unprobed input paired with `x_{k+1}` in regression targets.
/// `costs[k] = c(x_k, inputs[k])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub states: Vec<DVector<T>>,
    pub inputs: Vec<DVector<T>>,
    pub target_inputs: Vec<DVector<T>>,
    pub costs: Vec<T>,
    pub seed: u64,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// `(1/N) Σ c_k`.
    pub fn mean_cost(&self) -> T {
        let n = T::from_usize(self.costs.len()).expect("length fits scalar");
        self.costs.iter().fold(T::zero(), |acc, &c| acc + c) / n
    }
}

fn dim_err(what: &str, expected: (usize, usize), found: (usize, usize)) -> Error {
    Error::dimension(
        what,
        format!("{}x{}", expected.0, expected.1),
        format!("{}x{}", found.0, found.1),
    )
}

/// Checks dimensions, variances and definiteness of the plant and the cost.
pub fn validate<T: Real>(model: &SystemModel<T>, cost: &CostModel<T>) -> Result<()> {
    let n = model.a.nrows();
    let m = model.b.ncols();
    if n == 0 || model.a.ncols() != n {
        return Err(dim_err("A", (n.max(1), n.max(1)), model.a.shape()));
    }
    if m == 0 || model.b.nrows() != n {
        return Err(dim_err("B", (n, m.max(1)), model.b.shape()));
    }
    for (i, ch) in model.state_noise.iter().enumerate() {
        if ch.matrix.shape() != (n, n) {
            return Err(dim_err(&format!("A_{}", i + 1), (n, n), ch.matrix.shape()));
        }
        if ch.variance < T::zero() {
            return Err(Error::NegativeVariance {
                channel: format!("alpha_{}", i + 1),
                value: ch.variance.to_f64_lossy(),
            });
        }
    }
    for (j, ch) in model.input_noise.iter().enumerate() {
        if ch.matrix.shape() != (n, m) {
            return Err(dim_err(&format!("B_{}", j + 1), (n, m), ch.matrix.shape()));
        }
        if ch.variance < T::zero() {
            return Err(Error::NegativeVariance {
                channel: format!("beta_{}", j + 1),
                value: ch.variance.to_f64_lossy(),
            });
        }
    }
    for (name, s, want) in [
        ("D", &model.d, n),
        ("X0", &model.x0, n),
        ("Q", &cost.q, n),
        ("R", &cost.r, m),
    ] {
        if s.dim() != want {
            return Err(dim_err(name, (want, want), (s.dim(), s.dim())));
        }
    }

    let pd = T::lit(PD_THRESHOLD);
    let psd = -pd;
    let d_min = model.d.min_eigenvalue();
    let d_ok = if model.degenerate_noise {
        d_min >= psd
    } else {
        d_min > pd
    };
    if !d_ok {
        return Err(Error::AdditiveNoiseNotPositiveDefinite {
            min_eigenvalue: d_min.to_f64_lossy(),
        });
    }
    let x0_min = model.x0.min_eigenvalue();
    if x0_min < psd {
        return Err(Error::InitialCovarianceIndefinite {
            min_eigenvalue: x0_min.to_f64_lossy(),
        });
    }
    let r_min = cost.r.min_eigenvalue();
    if r_min <= pd {
        return Err(Error::InputWeightNotPositiveDefinite {
            min_eigenvalue: r_min.to_f64_lossy(),
        });
    }
    let q_min = cost.q.min_eigenvalue();
    if q_min < psd {
        return Err(Error::StateWeightIndefinite {
            min_eigenvalue: q_min.to_f64_lossy(),
        });
    }
    Ok(())
}

pub(crate) fn standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

fn standard_normal_vector<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<T> {
    DVector::from_fn(n, |_, _| standard_normal(rng))
}

/// Noise sampler for one model with its covariance factors precomputed.
#[derive(Debug, Clone)]
pub struct Plant<'a, T: Real> {
    model: &'a SystemModel<T>,
    d_factor: DMatrix<T>,
    x0_factor: DMatrix<T>,
    state_sd: Vec<T>,
    input_sd: Vec<T>,
}

impl<'a, T: Real> Plant<'a, T> {
    /// Assumes `model` has been validated.
    pub fn new(model: &'a SystemModel<T>) -> Self {
        Self {
            model,
            d_factor: psd_factor(model.d.matrix()),
            x0_factor: psd_factor(model.x0.matrix()),
            state_sd: model
                .state_noise
                .iter()
                .map(|c| c.variance.sqrt())
                .collect(),
            input_sd: model
                .input_noise
                .iter()
                .map(|c| c.variance.sqrt())
                .collect(),
        }
    }

    pub fn model(&self) -> &SystemModel<T> {
        self.model
    }

    /// `x_0 ~ N(0, X0)`; consumes `n` draws.
    pub fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<T> {
        &self.x0_factor * standard_normal_vector(self.model.state_dim(), rng)
    }

    /// One noisy transition; consumes `p + q + n` draws.
    pub fn step<R: Rng + ?Sized>(&self, x: &DVector<T>, u: &DVector<T>, rng: &mut R) -> DVector<T> {
        let m = self.model;
        let mut next = &m.a * x + &m.b * u;
        for (ch, &sd) in m.state_noise.iter().zip(&self.state_sd) {
            let alpha: T = standard_normal::<T, _>(rng) * sd;
            next.gemv(alpha, &ch.matrix, x, T::one());
        }
        for (ch, &sd) in m.input_noise.iter().zip(&self.input_sd) {
            let beta: T = standard_normal::<T, _>(rng) * sd;
            next.gemv(beta, &ch.matrix, u, T::one());
        }
        let w = standard_normal_vector(m.state_dim(), rng);
        next.gemv(T::one(), &self.d_factor, &w, T::one());
        next
    }
}

/// One-step map of the plant. Rebuilds the covariance factor on every call;
/// use [`Plant`] in loops.
pub fn step<T: Real, R: Rng + ?Sized>(
    model: &SystemModel<T>,
    x: &DVector<T>,
    u: &DVector<T>,
    rng: &mut R,
) -> DVector<T> {
    Plant::new(model).step(x, u, rng)
}

/// `x'Qx + u'Ru`.
pub fn stage_cost<T: Real>(cost: &CostModel<T>, x: &DVector<T>, u: &DVector<T>) -> T {
    x.dot(&(cost.q.matrix() * x)) + u.dot(&(cost.r.matrix() * u))
}

/// Sampling interface seen by the model-free learner: initial states,
/// transitions and measured stage costs. Nothing else about the plant is
/// exposed.
pub trait Environment<T: Real> {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn initial_state<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DVector<T>;
    /// Applies `u` in state `x`; returns the next state and `c(x, u)`.
    fn transition<R: Rng + ?Sized>(
        &mut self,
        x: &DVector<T>,
        u: &DVector<T>,
        rng: &mut R,
    ) -> (DVector<T>, T);
}

/// [`Environment`] backed by a simulated [`SystemModel`].
#[derive(Debug, Clone)]
pub struct SimulatedEnvironment<'a, T: Real> {
    plant: Plant<'a, T>,
    cost: &'a CostModel<T>,
}

impl<'a, T: Real> SimulatedEnvironment<'a, T> {
    pub fn new(model: &'a SystemModel<T>, cost: &'a CostModel<T>) -> Result<Self> {
        validate(model, cost)?;
        Ok(Self {
            plant: Plant::new(model),
            cost,
        })
    }
}

impl<T: Real> Environment<T> for SimulatedEnvironment<'_, T> {
    fn state_dim(&self) -> usize {
        self.plant.model().state_dim()
    }

    fn input_dim(&self) -> usize {
        self.plant.model().input_dim()
    }

    fn initial_state<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DVector<T> {
        self.plant.sample_initial_state(rng)
    }

    fn transition<R: Rng + ?Sized>(
        &mut self,
        x: &DVector<T>,
        u: &DVector<T>,
        rng: &mut R,
    ) -> (DVector<T>, T) {
        let c = stage_cost(self.cost, x, u);
        (self.plant.step(x, u, rng), c)
    }
}

/// Rolls out `u_k = L x_k + e_k`, `e_k ~ N(0, probe_var I)`, for `steps`
/// steps from a freshly sampled `x_0`.
///
/// Fails with [`Error::DivergentRollout`] once a state or cost stops being
/// finite.
pub fn rollout<T, E, R>(
    env: &mut E,
    gain: &ControlGain<T>,
    steps: usize,
    probe_var: T,
    rng: &mut R,
    seed: u64,
) -> Result<Trajectory<T>>
where
    T: Real,
    E: Environment<T>,
    R: Rng + ?Sized,
{
    let (n, m) = (env.state_dim(), env.input_dim());
    gain.check_dims(n, m)?;
    let probe_sd = probe_var.sqrt();

    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);
    let mut target_inputs = Vec::with_capacity(steps);
    let mut costs = Vec::with_capacity(steps);

    let mut x = env.initial_state(rng);
    for k in 0..steps {
        let e: DVector<T> = standard_normal_vector(m, rng);
        let u = gain.apply(&x) + e * probe_sd;
        let (next, c) = env.transition(&x, &u, rng);
        if !c.is_finite() || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergentRollout { step: k });
        }
        target_inputs.push(gain.apply(&next));
        states.push(x);
        inputs.push(u);
        costs.push(c);
        x = next;
    }
    inputs.push(gain.apply(&x));
    states.push(x);

    Ok(Trajectory {
        states,
        inputs,
        target_inputs,
        costs,
        seed,
    })
}

/// Seeded closed-loop rollout of a simulated plant.
pub fn simulate_closed_loop<T: Real>(
    model: &SystemModel<T>,
    cost: &CostModel<T>,
    gain: &ControlGain<T>,
    steps: usize,
    probe_var: T,
    seed: u64,
) -> Result<Trajectory<T>> {
    if steps == 0 {
        return Err(Error::InvalidLearnerConfig(
            "rollout length must be at least 1".into(),
        ));
    }
    if probe_var < T::zero() {
        return Err(Error::NegativeVariance {
            channel: "probe".into(),
            value: probe_var.to_f64_lossy(),
        });
    }
    let mut env = SimulatedEnvironment::new(model, cost)?;
    let mut rng = SimRng::seed_from_u64(seed);
    rollout(&mut env, gain, steps, probe_var, &mut rng, seed)
}
