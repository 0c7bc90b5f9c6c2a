//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("line {line}: rejected record: label {label} outside 0..=4")]
    LabelOutOfRange { line: usize, label: i64 },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("sample `{0}` has no label")]
    Unlabeled(String),

    #[error("invalid split ratios {0:?}: must be positive and sum to 1")]
    InvalidRatios(Vec<f64>),

    #[error("class {class} has {count} samples, need at least {needed} to stratify")]
    Stratification { class: usize, count: usize, needed: usize },

    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    #[error("line {line}: probability format error: {message}")]
    ProbFormat { line: usize, message: String },

    #[error("model `{model}` has no probabilities for {} id(s): {}", ids.len(), preview(ids))]
    MissingProbabilities { model: String, ids: Vec<String> },

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite feature at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("class {class} has {count} samples; probability calibration needs at least {needed}")]
    Calibration { class: usize, count: usize, needed: usize },

    #[error("no meta-classifier candidates to select from")]
    EmptyCandidates,

    #[error("class {0} is absent from y_true")]
    MissingClass(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stage name for pipeline failures, if this error carries one.
    pub fn stage(&self) -> Option<&str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

/// Attaches a pipeline stage name to errors.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: &str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &str) -> Result<T> {
        self.map_err(|source| match source {
            // keep the innermost stage name
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: stage.to_string(),
                source: Box::new(e),
            },
        })
    }
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 8;
    let mut s = ids
        .iter()
        .take(SHOWN)
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > SHOWN {
        s.push_str(", ...");
    }
    s
}
