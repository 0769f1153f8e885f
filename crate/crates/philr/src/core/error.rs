use thiserror::Error;

/// Classification of a [`ComputationError`], used by callers that dispatch on
/// the failure kind (the CLI maps kinds to exit codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    DimensionMismatch,
    NonFiniteInput,
    RankExceeded,
    ConvergenceFailure,
    SingularFactor,
    IoFailure,
}

/// Error type shared by every fallible operation in the crate.
///
/// Each failing operation returns exactly one kind; the payload carries
/// human-readable context (offending dimensions, iteration counts, paths).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ComputationError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("rank exceeded: {0}")]
    RankExceeded(String),
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),
    #[error("singular factor: {0}")]
    SingularFactor(String),
    #[error("io failure: {0}")]
    IoFailure(String),
}

impl ComputationError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            ComputationError::DimensionMismatch(_) => ErrorKind::DimensionMismatch,
            ComputationError::NonFiniteInput(_) => ErrorKind::NonFiniteInput,
            ComputationError::RankExceeded(_) => ErrorKind::RankExceeded,
            ComputationError::ConvergenceFailure(_) => ErrorKind::ConvergenceFailure,
            ComputationError::SingularFactor(_) => ErrorKind::SingularFactor,
            ComputationError::IoFailure(_) => ErrorKind::IoFailure,
        }
    }
}

pub type Result<T> = std::result::Result<T, ComputationError>;
