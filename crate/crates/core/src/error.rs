use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("problem dimension must be at least 1")]
    EmptyProblem,

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (factorization failed at pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("subsystem factorization failed at pivot {pivot}")]
    FactorizationFailure { pivot: usize },

    #[error("non-finite entry in problem data")]
    NonFinite,

    #[error("probability {value} outside [{lo}, {hi}]")]
    ProbabilityOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("probability vector has length {found}, expected {expected}")]
    ProbabilityLength { expected: usize, found: usize },

    #[error("categories do not partition the infeasible sets")]
    CategoryLeak,

    #[error("brute force enumeration is limited to n <= {max}, got n = {n}")]
    DimensionTooLarge { n: usize, max: usize },

    #[error("no KKT point found by enumeration")]
    NoKktPoint,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
