use thiserror::Error;

/// Errors raised by mesh construction, field operations, the solver and the
/// diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("mesh would have {nodes} nodes, budget is {budget}")]
    NodeBudgetExceeded { nodes: usize, budget: usize },

    #[error("inverted or degenerate simplex {0}")]
    InvertedSimplex(usize),

    #[error("boundary node {node} at {point:?} matches no boundary portion")]
    UnclassifiedBoundaryNode { node: usize, point: Vec<f64> },

    #[error("fields or sets live on different meshes")]
    MeshMismatch,

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    #[error("empty subset")]
    EmptySubset,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("zero vector where a nonzero one is required")]
    ZeroVector,

    #[error("variation field violates the boundary condition at node {0}")]
    TangencyViolated(usize),

    #[error("infeasible initial field: {0}")]
    InfeasibleInit(String),

    #[error("line search exhausted after {0} backtracking steps")]
    LineSearchExhausted(usize),

    #[error("reflection undefined: |u| = {norm} <= 1/2 at node {node}")]
    ReflectionUndefined { node: usize, norm: f64 },

    #[error("free boundary is not the flat plane x_n = 0")]
    NonFlatBoundary,

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("fixture incompatible with mesh: {0}")]
    IncompatibleFixture(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
