use thiserror::Error;

pub type Result<T> = std::result::Result<T, BfcrError>;

#[derive(Debug, Error)]
pub enum BfcrError {
    #[error("input contains no data")]
    EmptyInput,

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("non-finite value at {location}")]
    NonFiniteValue { location: String },

    #[error("series has {got} points; at least {needed} data points are required")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("brace anchor is zero")]
    ZeroAnchor,

    #[error("continuation is unbounded (max |response| = {max_abs})")]
    ContinuationUnbounded { max_abs: f64 },

    #[error("spectrum is not conjugate-symmetric (relative asymmetry {asymmetry:e})")]
    NonRealSignal { asymmetry: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    ShapeError { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("no data points left after exclusion")]
    NoData,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
