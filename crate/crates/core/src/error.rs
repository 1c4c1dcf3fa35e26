use thiserror::Error;

/// Errors raised by the numeric and learning modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value at layer {layer}")]
    Numeric { layer: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("undefined input: {0}")]
    UndefinedInput(String),

    #[error("validation error ({constraint}): {detail}")]
    Validation {
        constraint: &'static str,
        detail: String,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }

    /// Short category tag used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Numeric { .. } => "numeric",
            Error::Config(_) => "config",
            Error::UndefinedInput(_) => "undefined-input",
            Error::Validation { .. } => "validation",
            Error::Precondition(_) => "precondition",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "format",
        }
    }
}
