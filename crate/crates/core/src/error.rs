use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input document. `context` names the file or field.
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A formula was evaluated outside the range where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration mismatch: {0}")]
    Config(String),

    #[error("accumulator overflow at step {step}, output {output}: {value} does not fit in {bits} bits")]
    Overflow {
        step: usize,
        output: usize,
        value: i64,
        bits: u32,
    },

    /// A placement does not provide a (cluster, group) pair the layer needs.
    #[error("infeasible placement: {0}")]
    Infeasible(String),

    /// Broken internal invariant; indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}
