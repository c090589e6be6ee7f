use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("nav became non-positive at {date} (value {value})")]
    NavNonPositive { date: NaiveDate, value: f64 },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("order error at line {line}: {message}")]
    Order { line: usize, message: String },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate observation: innovation variance {0}")]
    DegenerateObservation(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("at {date}: {source}")]
    AtDate {
        date: NaiveDate,
        #[source]
        source: Box<Error>,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at(self, date: NaiveDate) -> Self {
        Error::AtDate {
            date,
            source: Box::new(self),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn in_file(self, path: impl Into<String>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// Strips date/stage/file context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtDate { source, .. }
            | Error::Stage { source, .. }
            | Error::File { source, .. } => source.root(),
            other => other,
        }
    }

    /// Usage-level failures (bad arguments or configuration) as opposed to data
    /// or model failures.
    pub fn is_usage(&self) -> bool {
        matches!(self.root(), Error::Config(_))
    }
}
