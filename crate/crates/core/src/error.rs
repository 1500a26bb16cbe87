use thiserror::Error;

/// Errors surfaced by the estimation and evaluation routines.
#[derive(Debug, Error)]
pub enum RomeError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate test: {0}")]
    DegenerateTest(String),
}

pub type Result<T> = std::result::Result<T, RomeError>;
