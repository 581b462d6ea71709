use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// `row` is the 1-based data row (header excluded).
    #[error("cannot parse value at row {row}, column `{column}`: {detail}")]
    Parse {
        row: usize,
        column: String,
        detail: String,
    },

    #[error("target column `{0}` not present")]
    MissingTarget(String),

    #[error("table has no data rows")]
    EmptyTable,

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("column `{0}` is constant and cannot be standardized")]
    ConstantColumn(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("schema mismatch: model expects {expected:?}, table provides {found:?}")]
    SchemaMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("target column `{0}` is not standardized")]
    UnstandardizedTarget(String),

    #[error("degenerate model: R² = {r2} leaves no unexplained variance")]
    DegenerateModel { r2: f64 },

    #[error("baseline effect size is zero: model is insensitive to all inputs")]
    ZeroBaseline,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("column `{column}` has {distinct} distinct values, at least {required} required")]
    TooFewDistinctValues {
        column: String,
        distinct: usize,
        required: usize,
    },

    #[error("series too short: length {len}, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("all x values are equal; slope undefined")]
    AllXEqual,

    #[error("bootstrap resampling kept producing all-equal x after {retries} retries")]
    DegenerateResampling { retries: usize },

    #[error("invalid interval [{low}, {high}]")]
    InvalidInterval { low: f64, high: f64 },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("external predictor failed: {0}")]
    External(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable machine-readable identifier, shared by the CLI error JSON and the C API.
    pub fn code(&self) -> &'static str {
        match self {
            Error::FileNotFound(_) => "file_not_found",
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            Error::MissingTarget(_) => "missing_target",
            Error::EmptyTable => "empty_table",
            Error::InvalidTable(_) => "invalid_table",
            Error::ConstantColumn(_) => "constant_column",
            Error::UnknownColumn(_) => "unknown_column",
            Error::InvalidRange(_) => "invalid_range",
            Error::InvalidConfig(_) => "invalid_config",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::SchemaMismatch { .. } => "schema_mismatch",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::EmptyInput => "empty_input",
            Error::UnstandardizedTarget(_) => "unstandardized_target",
            Error::DegenerateModel { .. } => "degenerate_model",
            Error::ZeroBaseline => "zero_baseline",
            Error::NonFinite(_) => "non_finite",
            Error::TooFewDistinctValues { .. } => "too_few_distinct_values",
            Error::TooShort { .. } => "too_short",
            Error::AllXEqual => "all_x_equal",
            Error::DegenerateResampling { .. } => "degenerate_resampling",
            Error::InvalidInterval { .. } => "invalid_interval",
            Error::Json(_) => "json",
            Error::External(_) => "external",
            Error::Context { source, .. } => source.code(),
        }
    }
}

/// Prefixes an error with what was being attempted.
pub trait Context<T> {
    fn context<S: Into<String>>(self, context: impl FnOnce() -> S) -> Result<T>;
}

impl<T> Context<T> for Result<T> {
    fn context<S: Into<String>>(self, context: impl FnOnce() -> S) -> Result<T> {
        self.map_err(|e| Error::Context {
            context: context().into(),
            source: Box::new(e),
        })
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::InvalidTable(format!("{other:?}")),
        }
    }
}
