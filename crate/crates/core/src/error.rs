use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (max |h_jk - h_kj| = {max_asymmetry:e}, tolerance {tolerance:e})")]
    NotSymmetric { max_asymmetry: f64, tolerance: f64 },
    #[error("degenerate matrix: {0}")]
    Degenerate(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("no decay data: {0}")]
    NoDecayData(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("index out of range: {index} (size {size})")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("quadrature unresolved: {0}")]
    Quadrature(String),
    #[error("problem too large for brute force: {0}")]
    TooLarge(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
