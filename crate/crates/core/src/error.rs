use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: column `{column}` not found")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}:{line}: column `{column}`: cannot parse `{value}`")]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("label {value} at row {row} is not 0 or 1")]
    NonBinaryLabel { row: usize, value: f64 },
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("dataset too small: {0}")]
    TooSmall(String),
    #[error("classification target has a single class")]
    SingleClass,
    #[error("expected {expected} feature columns, got {actual}")]
    ColumnMismatch { expected: usize, actual: usize },
    #[error("operation requires a {expected} model")]
    WrongTask { expected: &'static str },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("zero variance: {0}")]
    ZeroVariance(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("model format: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Format(_) => ErrorKind::Config,
            Error::ZeroVariance(_) | Error::Singular(_) | Error::Numeric(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    /// Reader failures that are really I/O errors keep the `Io` variant.
    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        if source.is_io_error() {
            if let csv::ErrorKind::Io(e) = source.into_kind() {
                return Error::io(path, e);
            }
            unreachable!("is_io_error implies an Io kind");
        }
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
