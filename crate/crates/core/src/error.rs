use thiserror::Error;

/// Failures reported by the solvers and the run harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation failed: {0}")]
    ValidationFailure(String),
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),
    #[error("no standing wave of length {ell} for eps = {eps} (ell/eps too small)")]
    NoSolution { ell: f64, eps: f64 },
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("configuration outside the admissible domain: {0}")]
    DomainError(String),
    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("initial state already violates the minimum gap ({min_gap} <= {threshold})")]
    EventAtStart { min_gap: f64, threshold: f64 },
    #[error("banded solve failed: zero pivot in row {row}")]
    SolveFailure { row: usize },
    #[error("field has no sign change")]
    NoLayers,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{failed} reference entries outside tolerance")]
    ToleranceFailure { failed: usize },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
