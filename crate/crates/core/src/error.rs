use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty class: class {0} has no samples")]
    EmptyClass(usize),

    #[error("single class: at least two classes are required, found {0}")]
    SingleClass(usize),

    /// The SMO solver hit its iteration cap with KKT violations above `tol`.
    #[error("did not converge after {iterations} iterations")]
    DidNotConverge { iterations: usize },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("empty partition: {0}")]
    EmptyPartition(String),

    #[error("{}:{line}: malformed row: {reason}", path.display())]
    MalformedRow {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{}:{line}: non-numeric value {value:?} in column {column}", path.display())]
    NonNumeric {
        path: PathBuf,
        line: usize,
        column: String,
        value: String,
    },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("fetch {entry}: {message}")]
    Fetch { entry: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
