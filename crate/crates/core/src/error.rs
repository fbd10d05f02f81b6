use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {row}: tied scores (ties are not supported)")]
    Tie { row: usize },

    #[error("row {row}, column {col}: non-finite value")]
    NonFinite { row: usize, col: usize },

    #[error("row {row}: not a permutation of 1..{r}")]
    NotPermutation { row: usize, r: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("failed to converge: {0}")]
    Convergence(String),

    #[error("required norm {0} is infinite")]
    InfiniteNorm(&'static str),

    #[error("enumeration of {requested} configurations exceeds budget of {cap}")]
    Budget { requested: f64, cap: u64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
