use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sparsity {k} out of range for length {n}")]
    SparsityOutOfRange { k: usize, n: usize },

    #[error("exact RIP enumeration needs {needed} supports, cap is {cap}")]
    EnumerationCap { needed: u128, cap: u64 },

    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("quantizer design failed: {0}")]
    Design(String),

    #[error("step grid does not bracket a minimum (best grid index {index} of {len})")]
    NotBracketed { index: usize, len: usize },

    #[error("malformed probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("matrix is rank deficient on support {support:?}")]
    RankDeficient { support: Vec<usize> },

    #[error("{what} did not converge within {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("bound domain violation: {0}")]
    Domain(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
