//! On-disk scenario store: one canonical document per id under
//! `<root>/scenarios/<id>.xml`, versioned by content hash.

use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid scenario id `{0}` (use 1-64 letters, digits, `-` or `_`)")]
    InvalidId(String),
    #[error("scenario `{0}` not found")]
    NotFound(String),
    #[error("version conflict on `{id}`: {reason}")]
    Conflict { id: String, reason: String },
    #[error("store I/O on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stored {
    pub version: String,
    pub document: Vec<u8>,
}

/// Version token of a document: the first 128 bits of its SHA-256, in hex.
pub fn version_of(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .take(16)
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn valid_id(id: &str) -> bool {
    (1..=64).contains(&id.len()) && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

#[derive(Debug)]
pub struct ScenarioStore {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl ScenarioStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let dir = root.join("scenarios");
        std::fs::create_dir_all(&dir).map_err(|source| StoreError::Io { path: dir, source })?;
        Ok(ScenarioStore {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_of(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.root.join("scenarios").join(format!("{id}.xml")))
    }

    pub fn get(&self, id: &str) -> Result<Stored, StoreError> {
        let path = self.path_of(id)?;
        match std::fs::read(&path) {
            Ok(document) => Ok(Stored {
                version: version_of(&document),
                document,
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound(id.to_string())),
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }

    /// Writes `document` if `expected` names the current version. Creating a
    /// new id requires no token; replacing an existing one always does.
    pub async fn put(&self, id: &str, document: &[u8], expected: Option<&str>) -> Result<String, StoreError> {
        let path = self.path_of(id)?;
        let lock = {
            let mut locks = self.locks.lock().expect("lock map poisoned");
            Arc::clone(locks.entry(id.to_string()).or_default())
        };
        let _guard = lock.lock().await;
        let current = match self.get(id) {
            Ok(s) => Some(s.version),
            Err(StoreError::NotFound(_)) => None,
            Err(e) => return Err(e),
        };
        match (current.as_deref(), expected) {
            (None, None) => {}
            (Some(_), None) => {
                return Err(StoreError::Conflict {
                    id: id.to_string(),
                    reason: "scenario exists; send its version in If-Match".into(),
                })
            }
            (None, Some(_)) => {
                return Err(StoreError::Conflict {
                    id: id.to_string(),
                    reason: "scenario does not exist; omit If-Match to create it".into(),
                })
            }
            (Some(have), Some(want)) if have != want => {
                return Err(StoreError::Conflict {
                    id: id.to_string(),
                    reason: format!("current version is {have}, request was based on {want}"),
                })
            }
            (Some(_), Some(_)) => {}
        }
        let tmp = path.with_extension("xml.tmp");
        let io_err = |source| StoreError::Io {
            path: path.clone(),
            source,
        };
        std::fs::write(&tmp, document).map_err(io_err)?;
        std::fs::rename(&tmp, &path).map_err(io_err)?;
        Ok(version_of(document))
    }
}
