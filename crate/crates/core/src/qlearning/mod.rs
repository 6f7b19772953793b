//! Model-free Q-learning for the average-cost problem: Q-kernel fitting by
//! recursive (or batch) least squares along closed-loop rollouts, followed by
//! greedy improvement of the gain.

mod features;
mod kernel;
mod learner;
mod regression;
mod rls;

pub use features::{kappa, phi};
pub use kernel::{policy_from_h, QKernel, MAX_HUU_CONDITION, MIN_HUU_EIGENVALUE};
pub use learner::{learn, run_online_learning, LearnerConfig, LearningResult, Solver};
pub use regression::{
    bls_estimate, estimate_kernel, rls_estimate, CostMode, Estimator, KernelEstimate,
    RANK_TOLERANCE,
};
pub use rls::{rls_update, RlsState, DENOMINATOR_GUARD};
