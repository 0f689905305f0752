use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("row {row} has norm {norm:e}, too small to normalize")]
    ZeroRow { row: usize, norm: f64 },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("matrix must have at least one row and one column (got {n}x{d})")]
    EmptyMatrix { n: usize, d: usize },

    #[error("value buffer holds {actual} entries, expected {expected}")]
    BadShape { expected: usize, actual: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("temperature must be positive, got {0}")]
    NonPositiveTau(f64),

    #[error("pairing is not bijective: {n_x} rows in X, {n_y} rows in Y")]
    NotBijective { n_x: usize, n_y: usize },

    #[error("gap norm {0:e} is too small; cosines to the gap are undefined")]
    ZeroGap(f64),

    #[error("noise covariance is identically zero")]
    ZeroCovariance,

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("variance threshold must lie in [0, 1], got {0}")]
    BadEpsilon(f64),

    #[error("invalid noise model: {0}")]
    BadModel(String),

    #[error("invalid quantizer range: {0}")]
    BadRange(String),

    #[error("label {label} at row {row} is outside [0, {num_classes})")]
    LabelOutOfRange { row: usize, label: i64, num_classes: usize },

    #[error("{path}: bad magic {found:?}, expected {expected:?}")]
    BadMagic { path: PathBuf, expected: String, found: String },

    #[error("{path}: unsupported version {found}")]
    BadVersion { path: PathBuf, found: u32 },

    #[error("{path}: unsupported dtype code {found}")]
    BadDtype { path: PathBuf, found: u32 },

    #[error("{path}: payload holds {actual} bytes, header requires {expected}")]
    TruncatedPayload { path: PathBuf, expected: u64, actual: u64 },

    #[error("{path}: {extra} trailing bytes after payload")]
    TrailingBytes { path: PathBuf, extra: u64 },

    #[error("{path}:{line}: expected {expected} columns, found {found}")]
    RaggedRows { path: PathBuf, line: usize, expected: usize, found: usize },

    #[error("{path}:{line}: cannot parse {token:?} as a number")]
    ParseError { path: PathBuf, line: usize, token: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by caller-supplied parameters rather than by
    /// the data being processed.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveTau(_)
                | Error::BadConfig(_)
                | Error::BadEpsilon(_)
                | Error::BadModel(_)
                | Error::BadRange(_)
        )
    }
}

pub(crate) fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, actual })
    }
}
