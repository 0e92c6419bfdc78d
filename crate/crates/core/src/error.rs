use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = DciError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DciError {
    /// Malformed input text. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("training error: {0}")]
    Training(String),

    /// Statistic undefined for the given input (e.g. zero-variance differences).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("task error: {0}")]
    Task(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("task {task}: {source}")]
    InTask {
        task: String,
        #[source]
        source: Box<DciError>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl DciError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        DciError::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DciError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_task(self, task: impl Into<String>) -> Self {
        DciError::InTask {
            task: task.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by the caller's input or configuration rather
    /// than an internal failure. The CLI maps these to exit code 2.
    pub fn is_user_error(&self) -> bool {
        match self {
            DciError::InTask { source, .. } => source.is_user_error(),
            DciError::Training(_) => false,
            _ => true,
        }
    }
}
