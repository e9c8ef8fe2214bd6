use thiserror::Error;

/// Errors raised by tree construction, updates, scoring and data handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponential rate {0}; rate must be positive and finite")]
    InvalidRate(f64),
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("no dimension has positive weight")]
    NoValidDimension,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point lies outside the model domain")]
    OutOfDomain,
    #[error("degenerate region: {0}")]
    DegenerateRegion(String),
    #[error("invalid cut script: {0}")]
    InvalidScript(String),
    #[error("point id {0} is not stored in the tree")]
    NotFound(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("AUC is undefined when only one class is present")]
    UndefinedAuc,
    #[error("series of length {len} is shorter than the shingle width {width}")]
    TooShort { len: usize, width: usize },
    #[error("unsupported dimension {0}; density grids support 1 or 2 dimensions")]
    UnsupportedDimension(usize),
    #[error("unknown synthetic dataset '{0}'")]
    UnknownDataset(String),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
