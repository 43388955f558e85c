use thiserror::Error;

/// Errors produced by every stage of the cropping pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty region")]
    EmptyRegion,
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("malformed json at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("no annotations")]
    NoAnnotations,
    #[error("format error: {0}")]
    Format(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown category {0}")]
    UnknownCategory(u64),
    #[error("adaptive kernel undefined for isolated object")]
    IsolatedObject,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
}

impl Error {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyRegion => "empty_region",
            Error::InvalidBox(_) => "invalid_box",
            Error::Json { .. } => "json",
            Error::Integrity(_) => "integrity",
            Error::NoAnnotations => "no_annotations",
            Error::Format(_) => "format",
            Error::Validation(_) => "validation",
            Error::UnknownCategory(_) => "unknown_category",
            Error::IsolatedObject => "isolated_object",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::ShapeMismatch { .. } => "shape_mismatch",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
