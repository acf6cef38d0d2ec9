use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid signature: {0}")]
    Signature(String),
    #[error("invalid structure: {0}")]
    Structure(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("size cap exceeded: {what} has {actual} elements, cap is {cap}")]
    CapExceeded { what: String, actual: usize, cap: usize },
    #[error("tuple not interior: {0}")]
    NotInterior(String),
    #[error("arity mismatch: expected {expected}, got {actual}")]
    Arity { expected: usize, actual: usize },
    #[error("class has no generator")]
    NoGenerator,
    #[error("distance set not additively closed within the diameter bound: {0}")]
    DistanceSet(String),
    #[error("amalgamation failed: {0}")]
    Amalgamation(String),
    #[error("not a vertex of the orbit graph: {0:?}")]
    NotAVertex(Vec<usize>),
    #[error("subset is not symmetric: {0}")]
    NotSymmetric(String),
    #[error("missing formula for edge code {0}")]
    MissingFormula(String),
    #[error("empty sample set")]
    EmptySamples,
    #[error("invalid argument: {0}")]
    Invalid(String),
}
