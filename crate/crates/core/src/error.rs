use thiserror::Error;

/// Errors surfaced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or argument violated a precondition.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A matrix factorization failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Rejection sampling of a joint support did not terminate.
    #[error("support sampling exhausted after {0} attempts")]
    SamplingExhausted(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
