//! Error type shared by all solver and pipeline modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed or unusable input data.
    #[error("data error: {0}")]
    Data(String),

    /// Input that makes the requested operation meaningless
    /// (e.g. an all-zero observed matrix for a regularization grid).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An iterative numerical routine failed to produce a usable result.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Not enough observations for the requested estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
