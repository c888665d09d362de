use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("degenerate axis: vector norm {norm:e} is below threshold")]
    DegenerateAxis { norm: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("nonphysical density at bin {bin}: {reason}")]
    NonPhysicalDensity { bin: usize, reason: String },

    #[error("bin {bin}: polarizing power {eta} requires an axis")]
    MissingAxis { bin: usize, eta: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: line {line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
