//! Command line and HTTP front ends for the assignment workflow.

pub mod api;
pub mod cli;
pub mod export;
pub mod views;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use paperassign_core::workflow::{WorkflowError, Workspace};
use thiserror::Error;

pub const DEFAULT_ACTOR: &str = "chair";

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed input {path}: {message}")]
    MalformedInput { path: PathBuf, message: String },
    #[error("bad request: {0}")]
    BadRequest(String),
}

impl GatewayError {
    pub fn name(&self) -> &'static str {
        match self {
            GatewayError::Workflow(e) => e.name(),
            GatewayError::Io { .. } => "IoError",
            GatewayError::MalformedInput { .. } => "MalformedDocument",
            GatewayError::BadRequest(_) => "BadRequest",
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        GatewayError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, GatewayError> {
    fs::read(path).map_err(|e| GatewayError::io(path, e))
}

/// Loads the conference document, or an empty one if the file does not exist yet.
pub fn open_document(path: &Path) -> Result<Workspace, GatewayError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(Workspace::load(&text)?),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Workspace::default()),
        Err(e) => Err(GatewayError::io(path, e)),
    }
}

/// Writes the document through a temporary file so readers never see a partial save.
pub fn persist(path: &Path, ws: &Workspace) -> Result<(), GatewayError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, ws.save()).map_err(|e| GatewayError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| GatewayError::io(path, e))
}
