use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("grid is not binary: cell ({row}, {col}) has liveness {a}")]
    NonBinaryInput { row: usize, col: usize, a: f64 },
    #[error("amplitude {value} for `{field}` is outside [0, 1]")]
    OutOfRange { field: String, value: f64 },
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("rotations require a square grid, got {width}x{height}")]
    NonSquareGrid { width: usize, height: usize },
    #[error("seed is not four-fold symmetric (rot90 deviation {deviation})")]
    SeedNotSymmetric { deviation: f64 },
    #[error("sweep lattice has {points} points, budget is {budget}")]
    BudgetExceeded { points: usize, budget: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("image encoding failed: {0}")]
    Image(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    /// Whether the error stems from user input rather than an internal fault.
    pub fn is_invalid_input(&self) -> bool {
        match self {
            Error::ZeroVector | Error::Image(_) => false,
            Error::Io { source, .. } => source.kind() == io::ErrorKind::NotFound,
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
