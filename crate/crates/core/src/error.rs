use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {what} is too close to the boundary (1 - |x|^2 = {margin:e})")]
    BoundaryProximity { what: String, margin: f64 },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("invalid subspace: {0}")]
    InvalidSubspace(String),

    #[error("invalid components: {0}")]
    InvalidComponents(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("degenerate pair: source points {i} and {j} coincide")]
    DegeneratePair { i: usize, j: usize },

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("dataset is not centered: Frechet mean norm {0:e}")]
    NotCentered(f64),

    #[error(
        "Frechet mean did not converge after {iterations} iterations (gradient norm {grad_norm:e})"
    )]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("graph is disconnected: components {0:?}")]
    Disconnected(Vec<Vec<String>>),

    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::Internal(_) | Error::ZeroVariance(_)
        )
    }
}
