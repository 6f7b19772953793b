use thiserror::Error;

/// Errors raised by the solvers, the simulator and the learner.
///
/// Numeric payloads are carried as `f64` whatever scalar type produced them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: String,
        expected: String,
        found: String,
    },

    #[error("matrix is not symmetric: relative asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    Asymmetric { asymmetry: f64, tolerance: f64 },

    #[error("packed vector of length {len} is not of the form n(n+1)/2")]
    MalformedPacked { len: usize },

    #[error("expected a vecs-packed vector, found vech")]
    WrongPackKind,

    #[error(
        "additive noise covariance D is not positive definite (min eigenvalue {min_eigenvalue:e})"
    )]
    AdditiveNoiseNotPositiveDefinite { min_eigenvalue: f64 },

    #[error("input weight R is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    InputWeightNotPositiveDefinite { min_eigenvalue: f64 },

    #[error("state weight Q is indefinite (min eigenvalue {min_eigenvalue:e})")]
    StateWeightIndefinite { min_eigenvalue: f64 },

    #[error("initial state covariance X0 is indefinite (min eigenvalue {min_eigenvalue:e})")]
    InitialCovarianceIndefinite { min_eigenvalue: f64 },

    #[error("noise variance {channel} is negative ({value})")]
    NegativeVariance { channel: String, value: f64 },

    #[error("gain is not admissible: second-moment spectral radius {rho} >= 1")]
    NotAdmissible { rho: f64 },

    #[error("linear system (I - M) is numerically singular; spectral radius is close to 1")]
    SingularSystem,

    #[error("kernel is corrupted: R + B'PB + sum(beta_j B_j'PB_j) is not positive definite")]
    CorruptedKernel,

    #[error("RLS update is ill-conditioned (denominator {denominator:e})")]
    IllConditionedUpdate { denominator: f64 },

    #[error("insufficient excitation: {detail}; raise the probing variance or the rollout length")]
    InsufficientExcitation { detail: String },

    #[error(
        "unreliable Q kernel: H_uu min eigenvalue {min_eigenvalue:.3e}, condition number {condition:.3e}; \
         re-estimate with more data"
    )]
    UnreliableKernel { min_eigenvalue: f64, condition: f64 },

    #[error("rollout diverged at step {step}: state is no longer finite")]
    DivergentRollout { step: usize },

    #[error("invalid learner configuration: {0}")]
    InvalidLearnerConfig(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn dimension(
        what: impl Into<String>,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::Dimension {
            what: what.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
