//! Error type shared across the toolkit.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// A cell that does not parse as a finite real. Rows and columns are
    /// 1-based and count the header row if present.
    #[error("{path}, row {row}, column {column}: cell '{value}' is not a finite number")]
    BadCell {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("{path}, row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: outcome column '{name}' not found (columns: {available:?})")]
    OutcomeColumnMissing {
        path: PathBuf,
        name: String,
        available: Vec<String>,
    },

    #[error("{context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("linear fit needs more rows than features: n={n}, p={p}")]
    Underdetermined { n: usize, p: usize },

    #[error("logistic outcomes must be exactly 0 or 1, found {value} at row {row}")]
    NonBinaryOutcome { row: usize, value: f64 },

    #[error("bootstrap replicate {replicate} failed: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("replicate {replicate}: out-of-bag set still empty after {retries} redraws")]
    EmptyOutOfBag { replicate: usize, retries: usize },

    #[error("scenario '{name}' aborted: {failed} of {total} replications failed")]
    ScenarioAborted {
        name: String,
        failed: usize,
        total: usize,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn dim(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}
