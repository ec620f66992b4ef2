use thiserror::Error;

#[derive(Debug, Error)]
pub enum KnitError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The resource state lies outside the classes for which the fully
    /// entangled fraction is computed exactly.
    #[error("unsupported state class: {0}")]
    UnsupportedClass(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("locality audit failed at term {term}: {reason}")]
    Audit { term: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, KnitError>;
