//! Average-cost linear-quadratic regulation of discrete-time plants with
//! multiplicative and additive Gaussian noise.
//!
//! Two solution paths share one set of types:
//!
//! * [`policy_iteration`] alternates exact policy evaluation (a stochastic
//!   Lyapunov equation) with greedy improvement, using the plant matrices.
//! * [`qlearning::learn`] fits the Q-function kernel from closed-loop data by
//!   recursive least squares and improves the gain from it, touching the
//!   plant only through the [`Environment`] sampling interface.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`). The `*64` aliases below fix it to `f64`.

// `!(x > 0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod packing;
pub mod policy_iteration;
pub mod qlearning;
pub mod random_system;
pub mod scalar;
pub mod system;

pub use analysis::{
    average_cost, is_admissible, moment_operator, policy_improvement, sare_residual, sle_residual,
    solve_sle, stationary_covariance, Admissibility, MomentOperator, ValueKernel,
};
pub use error::{Error, Result};
pub use packing::{kron, unvecs, vech, vecs, PackKind, PackedVec, SymMatrix};
pub use policy_iteration::{policy_iteration, q_kernel_from_value, PiTrace};
pub use qlearning::{
    kappa, learn, phi, policy_from_h, run_online_learning, CostMode, LearnerConfig, LearningResult,
    QKernel, RlsState, Solver,
};
pub use scalar::Real;
pub use system::{
    simulate_closed_loop, stage_cost, step, validate, ControlGain, CostModel, Environment,
    NoiseChannel, SimulatedEnvironment, SystemModel, Trajectory,
};

/// Random stream used for every seeded simulation.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub type SymMatrix64 = SymMatrix<f64>;
pub type SystemModel64 = SystemModel<f64>;
pub type CostModel64 = CostModel<f64>;
pub type ControlGain64 = ControlGain<f64>;
pub type ValueKernel64 = ValueKernel<f64>;
pub type QKernel64 = QKernel<f64>;
pub type PiTrace64 = PiTrace<f64>;
pub type LearnerConfig64 = LearnerConfig<f64>;
pub type LearningResult64 = LearningResult<f64>;
pub type Trajectory64 = Trajectory<f64>;

pub type SystemModel32 = SystemModel<f32>;
pub type CostModel32 = CostModel<f32>;
pub type ControlGain32 = ControlGain<f32>;
