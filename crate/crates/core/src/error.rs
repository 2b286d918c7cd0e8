use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("statement {0} is not part of the instance")]
    ForeignStatement(String),

    #[error("instance is not normalized: pointer `{0}` is the target of several store statements (run normalize_type4 first)")]
    NotNormalized(String),

    #[error("scale guard exceeded: {0}")]
    ScaleGuard(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("unknown pointer `{0}`")]
    UnknownPointer(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
