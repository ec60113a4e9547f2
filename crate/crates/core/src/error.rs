use thiserror::Error;

/// Errors raised by chain construction, geometry and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("group mismatch: {0}")]
    GroupMismatch(String),

    #[error("chain mismatch: {0}")]
    ChainMismatch(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("dependent basis: {0}")]
    DependentBasis(String),

    #[error("non-injective map")]
    NonInjective,

    #[error("summand {index}: {message}")]
    InvalidSummand { index: usize, message: String },

    #[error("operation requires k >= {required}, chain has k = {k}")]
    DimensionTooLow { required: usize, k: usize },

    #[error("exceptional level {level}: {message}")]
    ExceptionalLevel { level: f64, message: String },

    #[error("restriction did not converge: {0}")]
    NonConvergent(String),

    #[error("support point {index} is not covered by any center")]
    Uncovered { index: usize },

    #[error("no nonexceptional radius found in [{lo}, {hi}]")]
    NoRadius { lo: f64, hi: f64 },

    #[error("chain is not embeddable in the complex: {0}")]
    NotEmbeddable(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("io: {0}")]
    Io(String),

    #[error("infeasible budget: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
