use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad user-supplied configuration (dimensions, unknown names, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A hyper-parameter outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A caller broke an API precondition (dataset/covariance mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The environment violates the linear MDP normalization assumptions.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A matrix lost positive definiteness.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An unclipped REPO Q estimate crossed the safety ceiling.
    #[error("numerical abort: {0}")]
    NumericalAbort(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
