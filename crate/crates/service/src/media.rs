//! Resolves webhook media references to audio bytes.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MediaError {
    #[error("media `{0}` not found")]
    NotFound(String),
    #[error("media id `{0}` is not a plain file name")]
    InvalidId(String),
    #[error("media `{id}`: {message}")]
    Io { id: String, message: String },
}

pub trait MediaStore: Send + Sync {
    fn fetch(&self, id: &str) -> Result<Vec<u8>, MediaError>;
}

#[derive(Debug, Default)]
pub struct MemoryMedia {
    items: RwLock<HashMap<String, Vec<u8>>>,
}

impl MemoryMedia {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, id: impl Into<String>, bytes: Vec<u8>) {
        self.items.write().unwrap_or_else(|p| p.into_inner()).insert(id.into(), bytes);
    }
}

impl MediaStore for MemoryMedia {
    fn fetch(&self, id: &str) -> Result<Vec<u8>, MediaError> {
        self.items.read().unwrap_or_else(|p| p.into_inner()).get(id).cloned().ok_or_else(|| MediaError::NotFound(id.into()))
    }
}

/// Media ids are file names inside one directory.
#[derive(Debug, Clone)]
pub struct DirMedia {
    root: PathBuf,
}

impl DirMedia {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

impl MediaStore for DirMedia {
    fn fetch(&self, id: &str) -> Result<Vec<u8>, MediaError> {
        let plain = !id.is_empty() && !id.starts_with('.') && !id.contains(['/', '\\']);
        if !plain {
            return Err(MediaError::InvalidId(id.into()));
        }
        match std::fs::read(self.root.join(id)) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(MediaError::NotFound(id.into())),
            Err(e) => Err(MediaError::Io { id: id.into(), message: e.to_string() }),
        }
    }
}
