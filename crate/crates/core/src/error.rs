use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("unknown {what} code {code}")]
    Vocabulary { what: &'static str, code: i64 },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("sequence of length {len} exceeds capacity {max}")]
    Capacity { len: usize, max: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint incompatible with expected config: {}", .fields.join(", "))]
    Compatibility { fields: Vec<String> },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Dimension {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}
