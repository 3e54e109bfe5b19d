use std::path::PathBuf;

/// Errors raised anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value fell outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Fatal structural problem in an input file (bad header, non-rectangular grid).
    #[error("{file}:{line}: {message}")]
    Schema {
        file: String,
        line: u64,
        message: String,
    },

    /// A grid or table lookup could not be satisfied.
    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("solver did not converge after {iterations} iterations ({measure} = {value:.3e})")]
    NonConvergence {
        iterations: usize,
        measure: &'static str,
        value: f64,
    },

    #[error("feature schema mismatch: missing [{}], extra [{}]", missing.join(", "), extra.join(", "))]
    SchemaMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("all {0} grid candidates failed to fit")]
    AllCandidatesFailed(usize),

    #[error("model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(file: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Schema {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
