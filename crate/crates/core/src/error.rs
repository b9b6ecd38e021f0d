use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Thresholds (or marginal probabilities) break the ordering the
    /// cumulative family requires. Indices are 1-based.
    #[error("threshold order violated at ({first},{second}): {detail}")]
    OrderingViolation {
        first: usize,
        second: usize,
        detail: String,
    },

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("degenerate conditioning event (probability {0:e})")]
    DegenerateCondition(f64),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    /// An item whose observed responses leave the likelihood unbounded.
    #[error("degenerate item {item}: no observations in categories {categories:?}")]
    DegenerateItem { item: String, categories: Vec<usize> },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
