use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex index {index} out of range for graph on {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("graph is disconnected: vertex {0} is unreachable from vertex 0")]
    Disconnected(usize),
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("vertex set must be non-empty")]
    EmptySet,
    #[error("set must be a proper non-empty subset of the vertices")]
    ImproperSubset,
    #[error("size guard exceeded: {what} requires n <= {limit}, got {actual}")]
    SizeGuard {
        what: &'static str,
        limit: usize,
        actual: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("graph is not regular")]
    NotRegular,
    #[error("bias matrix has a negative entry {value:e} at ({row}, {col})")]
    NegativeBias { row: usize, col: usize, value: f64 },
    #[error("matrix is not a reversible stochastic matrix: {0}")]
    NotReversible(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("eigensolver failed to converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
