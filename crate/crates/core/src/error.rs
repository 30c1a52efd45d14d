use thiserror::Error;

/// Errors raised by the bound computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: su(n) requires n >= 2, got {0}")]
    InvalidDimension(usize),

    #[error("matrix is not an element of su(n): hermiticity deviation {hermitian_dev:.3e}, trace {trace_dev:.3e}")]
    InvalidElement { hermitian_dev: f64, trace_dev: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("representation dimension {dim} exceeds cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("sum of squared generators is not proportional to the identity (relative deviation {deviation:.3e})")]
    NotIrreducible { deviation: f64 },

    #[error("parametrization expects {expected} parameters, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("invalid parametrization: {0}")]
    InvalidParametrization(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("quantum Fisher information is singular (rank {rank} of {dim}, condition number {condition:.3e})")]
    SingularInformation {
        rank: usize,
        dim: usize,
        condition: f64,
    },

    #[error("generator covariance is singular (rank {rank} of {dim}); not all parameters are estimable with this probe")]
    NotAllEstimable {
        rank: usize,
        dim: usize,
        condition: f64,
    },

    #[error("weight matrix is not symmetric positive definite")]
    InvalidWeight,

    #[error("su(3) cyclic state needs nonzero integers with 4l^2 = 3k(k+1); got k={k}, l={l}")]
    DiophantineConstraint { k: i64, l: i64 },

    #[error("negative occupation number in Fock state {0:?}")]
    NegativeOccupation(Vec<i64>),

    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "optimization failed: all {restarts} restarts ended on a singular covariance ({reason})"
    )]
    OptimizationFailed { restarts: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
