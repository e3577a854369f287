use std::path::PathBuf;

/// Problems found while reading a site-data CSV. Line numbers are 1-based
/// and count the header.
#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("malformed header: expected `{expected}`, found `{found}`")]
    MalformedHeader {
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: {reason}")]
    BadRow { line: u64, reason: String },
    #[error("line {line}: date is not after the previous row's date")]
    NonMonotonicDates { line: u64 },
    #[error("line {line}: {reason}")]
    ConsistencyViolation { line: u64, reason: String },
    #[error("file contains no data rows")]
    Empty,
}

impl CsvError {
    pub fn line(&self) -> Option<u64> {
        match self {
            CsvError::MalformedHeader { .. } => Some(1),
            CsvError::BadRow { line, .. }
            | CsvError::NonMonotonicDates { line }
            | CsvError::ConsistencyViolation { line, .. } => Some(*line),
            CsvError::Empty => None,
        }
    }
}

/// Everything the command line can fail with.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: CsvError,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sparsecast_core::Error),
    #[error("cannot render report: {0}")]
    Report(#[from] crate::report::ReportError),
}

impl CliError {
    /// 1 for usage errors, 2 for data and validation errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
