use thiserror::Error;

use crate::l1regression::LpError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("data set is empty")]
    EmptyData,

    #[error("region has zero mass")]
    ZeroMassRegion,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{what}: size {size} exceeds cap {cap}")]
    CapExceeded { what: &'static str, size: u128, cap: u128 },

    #[error("query `{descriptor}` returned {value}, outside [-1, 1]")]
    QueryRange { descriptor: String, value: f64 },

    #[error("ratio guard violated: estimate {p2} minus tolerance {tau} is below {gamma}")]
    RatioGuard { p2: f64, tau: f64, gamma: f64 },

    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),

    #[error("no qualifying hypothesis: {0}")]
    NoHypothesis(String),

    #[error("weak learner failed {attempts} consecutive attempts in round {round}")]
    WeakLearnerFailed { round: usize, attempts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
