use crate::geometry::Point;
use thiserror::Error;

/// Errors surfaced by pattern construction, simulation and estimation.
#[derive(Debug, Error)]
pub enum PplError {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("non-finite integrand at ({}, {})", .0.x, .0.y)]
    NonFiniteIntegrand(Point),

    #[error("non-finite innovation term at ({}, {})", .0.x, .0.y)]
    NonFiniteTerm(Point),

    #[error("retention probability {0} outside [0, 1]")]
    InvalidRetention(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel not valid: eigenvalue {0} exceeds 1")]
    KernelNotValid(f64),

    #[error("covariance factorization failed after maximum jitter")]
    CovarianceFactorization,

    #[error("no feasible parameter in the search region")]
    NoFeasibleParameter,

    #[error("no admissible folds: every fold is excluded by its indicator")]
    NoAdmissibleFolds,

    #[error("empty innovation list")]
    EmptyInnovations,

    #[error("test function integral over the window is {0}")]
    DegenerateTestFunction(&'static str),

    #[error("window fully covered: pseudolikelihood denominator is zero")]
    WindowFullyCovered,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PplError>;
