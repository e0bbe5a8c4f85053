use std::path::PathBuf;

use crate::payload::TargetFamily;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input SQL is empty")]
    EmptySql,

    #[error("question text is empty")]
    EmptyQuestion,

    #[error("query did not parse cleanly; {operation} requires a structured parse")]
    DegradedSql { operation: &'static str },

    #[error("query spans multiple lines; the {family} payload only supports single-line statements")]
    MultiLineQuery { family: TargetFamily },

    #[error("query is not eligible for the {family} payload: missing {missing} clause")]
    Ineligible {
        family: TargetFamily,
        missing: &'static str,
    },

    #[error("no named table available for the {family} payload")]
    NoTableForPayload { family: TargetFamily },

    #[error("payload template for {family} does not produce a detectable target pattern")]
    TemplateMismatch { family: TargetFamily },

    #[error("{what} does not exist: {path}")]
    MissingInput { what: String, path: PathBuf },

    #[error("invalid trigger spec: {0}")]
    InvalidTrigger(String),

    #[error("invalid poison plan: {0}")]
    InvalidPlan(String),

    #[error("invalid simulator profile: {0}")]
    InvalidProfile(String),

    #[error("pair {pair}: requested {needed} samples but only {available} are eligible")]
    InsufficientEligibles {
        pair: String,
        needed: usize,
        available: usize,
    },

    #[error("sample {id}: {source}")]
    SampleTransform {
        id: String,
        source: Box<Error>,
    },

    #[error("database {db_id} not found at {path}")]
    DbNotFound { db_id: String, path: PathBuf },

    #[error("gold query failed to execute: {message}")]
    GoldNotExecutable { message: String },

    #[error("predictions reference unknown sample ids: {}", ids.join(", "))]
    UnresolvedPredictionIds { ids: Vec<String> },

    #[error("corpus frequency report is empty; build it from a non-empty reference corpus")]
    EmptyCorpusStats,

    #[error("{path}: {detail}")]
    SchemaViolation { path: String, detail: String },

    #[error("dataset manifest does not match contents: {detail}")]
    ManifestMismatch { detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Sqlite(#[from] rusqlite::Error),
}

impl Error {
    /// True for errors caused by bad inputs or configuration rather than
    /// I/O or engine failures. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Json { .. } | Error::Sqlite(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
