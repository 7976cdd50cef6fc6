use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid break points: {0}")]
    InvalidBreaks(String),
    #[error("wrong number of values: expected {expected}, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("non-finite input value at index {0}")]
    NonFinite(usize),
    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("singular linear system (pivot {0} vanished)")]
    Singular(usize),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("missing derivative data: {0}")]
    MissingData(String),
    #[error("no elimination order for this non-conforming layout ({0}); use a truncated plan with enough cells per patch instead")]
    NoEliminationOrder(String),
    #[error("u-sequence overflow at index {0}")]
    Overflow(usize),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
