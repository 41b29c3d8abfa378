use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("network has a directed cycle through vertex `{0}`")]
    CycleDetected(String),
    #[error("vertex `{vertex}` is {reason}")]
    Unreachable {
        vertex: String,
        reason: &'static str,
    },
    #[error("bad edge `{edge}`: {reason}")]
    BadEdge { edge: String, reason: String },
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("network has more than {0} origin-destination paths")]
    TooManyPaths(usize),
    #[error("edge `{edge}` is not on path `{path}`")]
    EdgeNotOnPath { edge: String, path: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{check}: {message}")]
    Validation {
        check: &'static str,
        message: String,
    },
    #[error("initial preferences sum to {sum}, expected throughput {expected}")]
    SimplexViolation { sum: f64, expected: f64 },
    #[error("preference total at node {node} is {sum}, cannot split throughput")]
    DegenerateSimplex { node: usize, sum: f64 },
    #[error("edge `{edge}` holds mass {mass} at node {node}, above the limit {limit}")]
    MassBoundExceeded {
        edge: String,
        node: usize,
        mass: f64,
        limit: f64,
    },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("time {t} outside [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },
}
