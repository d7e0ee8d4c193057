use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed EDF header: {0}")]
    MalformedHeader(String),
    #[error("unsupported EDF variant: {0}")]
    UnsupportedVariant(String),
    #[error("truncated EDF data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("window of {len} samples is shorter than the FFT size {n_fft}")]
    WindowTooShort { len: usize, n_fft: usize },
    #[error("{found} leading seizures with usable preictal data; at least {required} are needed")]
    InsufficientSeizures { found: usize, required: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("pool {pool:?} larger than input {input:?}")]
    PoolLargerThanInput { pool: [usize; 3], input: [usize; 3] },
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("stale cache: {0}")]
    StaleCache(String),
    #[error("class {0} is missing from the sample set")]
    MissingClass(&'static str),
    #[error("non-finite gradient at parameter {0}")]
    NonFiniteGradient(usize),
    #[error("no test samples for fold {0}")]
    NoTestSamples(usize),
    #[error("{0} is undefined: its denominator is zero")]
    UndefinedMetric(&'static str),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attaches the file being processed to an error.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File { path: path.into(), source: Box::new(self) }
    }

    /// The innermost error, skipping file context.
    pub fn root(&self) -> &Error {
        match self {
            Error::File { source, .. } => source.root(),
            other => other,
        }
    }
}
