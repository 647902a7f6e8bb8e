use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed csv at row {row}, column {col}: {msg}")]
    CsvFormat { row: usize, col: usize, msg: String },

    #[error("subject {subject} has inconsistent labels")]
    InconsistentLabel { subject: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("no feature columns")]
    NoFeatures,

    #[error("feature set mismatch between scaler fit and apply")]
    FeatureMismatch,

    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training set contains a single class")]
    SingleClass,

    #[error("subject leakage detected: {0}")]
    SubjectLeakage(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("candidate feature already selected")]
    AlreadySelected,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("no results to report")]
    NoResults,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
