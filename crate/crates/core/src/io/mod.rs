pub mod config;
pub mod csv;
pub mod vtk;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid probe: ({x}, {y}) m lies outside the domain")]
    InvalidProbe { x: f64, y: f64 },
    #[error("invalid output data: {0}")]
    InvalidInput(String),
}

/// Writes `text` to `path`, creating parent directories.
pub(crate) fn write_text(path: &std::path::Path, text: &str) -> Result<(), OutputError> {
    let io = |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}
