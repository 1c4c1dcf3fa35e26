use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] gim_morl::Error),

    #[error("invalid setting `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        HarnessError::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Tag printed in front of the error line by the binary.
    pub fn category(&self) -> &'static str {
        match self {
            HarnessError::Core(e) => e.category(),
            HarnessError::Validation { .. } | HarnessError::Toml(_) => "config",
            HarnessError::Csv(_) | HarnessError::Json(_) => "format",
            HarnessError::Io { .. } => "io",
        }
    }
}
