use std::path::PathBuf;

/// Errors raised anywhere in the pricing pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("singular design: dependent columns {columns:?}")]
    Singular { columns: Vec<String> },

    #[error("did not converge after {iterations} iterations: {detail}")]
    Convergence {
        iterations: usize,
        detail: String,
        /// Objective trajectory (RSS per cycle, or last coefficient iterate).
        trajectory: Vec<f64>,
    },

    #[error("training diverged at epoch {epoch} (loss {loss:e}); try a lower learning rate")]
    Divergence { epoch: usize, loss: f64 },

    #[error("non-finite loss at epoch {epoch}")]
    Numeric { epoch: usize },

    #[error("leakage: {0}")]
    Leakage(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
