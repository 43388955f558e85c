use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dmcrop::Error),
    /// A core error tied to the file it came from.
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: dmcrop::Error },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("image codec: {0}")]
    Image(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.to_path_buf(), message: err.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) | CliError::File { source: e, .. } => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Image(_) => "image",
            CliError::Usage(_) => "usage",
        }
    }

    /// Usage problems exit with 2, everything else with 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// One line of JSON: `{"error":"<kind>","message":"..."}`.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

impl From<image::ImageError> for CliError {
    fn from(e: image::ImageError) -> Self {
        CliError::Image(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_line_is_single_line_and_tagged() {
        let e = CliError::from(dmcrop::Error::Integrity("annotation 3 references\nmissing image 99".into()));
        let line = e.to_json_line();
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "integrity");
        assert_eq!(e.exit_code(), 1);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
    }
}
