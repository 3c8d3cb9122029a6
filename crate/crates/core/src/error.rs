use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("statistics error: {0}")]
    Statistics(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("step failure at t = {time}: {reason}")]
    StepFailure { time: f64, reason: String },
    #[error("unsupported observable: {0}")]
    UnsupportedObservable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
