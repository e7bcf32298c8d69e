use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("problem {problem_id}: {reason}")]
    InvalidProblem { problem_id: String, reason: String },

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("unknown POS tag {0:?}")]
    UnknownPosTag(String),

    #[error("POS tags unavailable for sentence {sentence_id}")]
    PosTagsUnavailable { sentence_id: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("all training sentences are empty after preprocessing")]
    EmptyVocabulary,

    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),

    #[error("non-finite feature value at row {row}")]
    NonFiniteFeature { row: usize },

    #[error("feature index {index} exceeds model dimension {dim}")]
    DimensionOverflow { index: usize, dim: usize },

    #[error("gold labels missing for problem {problem_id}")]
    MissingGold { problem_id: String },

    #[error("line search failure at iteration {iteration}: no progress from objective {objective}")]
    LineSearchFailure { iteration: usize, objective: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model bundle: {0}")]
    Bundle(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse error classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl CoreError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            CoreError::LineSearchFailure { .. } | CoreError::NonFiniteFeature { .. } => {
                ErrorKind::Numerical
            }
            CoreError::InvalidConfig(_) => ErrorKind::Usage,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }
}
