use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex index {index} out of range for graph with {n} vertices")]
    Index { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A documented precondition of an operation was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("graph with {n} vertices exceeds the cap of {cap} for {what}")]
    Size { n: usize, cap: usize, what: &'static str },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}
