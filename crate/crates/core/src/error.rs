use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input does not fit the declared feature space or model schema.
    #[error("validation error: {0}")]
    Validation(String),

    /// The exhaustive oracle would need more completions than the configured cap.
    #[error("oracle too large: {required} completions exceed cap {cap}")]
    OracleTooLarge { required: u128, cap: u128 },

    /// A precondition of an operation was not met by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Structural and exhaustive procedures disagreed in cross-check mode.
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
