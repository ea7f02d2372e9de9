//! Access to encoded frame images keyed by original frame index.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameSourceError {
    #[error("no frame images available")]
    Empty,
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Resolves an original frame index to encoded image bytes.
pub trait FrameSource: Send + Sync {
    fn image(&self, original_index: u64) -> Result<Vec<u8>, FrameSourceError>;
}

/// A directory of images named by original frame index, e.g.
/// `000123.jpg`. Requests for an index without its own image get the
/// nearest stored frame (earlier on ties).
#[derive(Debug, Clone)]
pub struct DirFrameSource {
    files: BTreeMap<u64, PathBuf>,
}

impl DirFrameSource {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, FrameSourceError> {
        let dir = dir.as_ref();
        let entries = fs::read_dir(dir).map_err(|source| FrameSourceError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut files = BTreeMap::new();
        for entry in entries {
            let entry = entry.map_err(|source| FrameSourceError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
            let path = entry.path();
            let index = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse::<u64>().ok());
            if let (Some(index), true) = (index, path.is_file()) {
                files.insert(index, path);
            }
        }
        if files.is_empty() {
            return Err(FrameSourceError::Empty);
        }
        Ok(Self { files })
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn resolve(&self, original_index: u64) -> &Path {
        let below = self.files.range(..=original_index).next_back();
        let above = self.files.range(original_index..).next();
        let (_, path) = match (below, above) {
            (Some(b), Some(a)) => {
                if a.0 - original_index < original_index - b.0 {
                    a
                } else {
                    b
                }
            }
            (Some(b), None) => b,
            (None, Some(a)) => a,
            (None, None) => unreachable!("constructor rejects empty directories"),
        };
        path
    }
}

impl FrameSource for DirFrameSource {
    fn image(&self, original_index: u64) -> Result<Vec<u8>, FrameSourceError> {
        let path = self.resolve(original_index);
        fs::read(path).map_err(|source| FrameSourceError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// In-memory images, mostly for tests and fixtures.
#[derive(Debug, Clone, Default)]
pub struct MemoryFrameSource {
    pub images: BTreeMap<u64, Vec<u8>>,
}

impl FrameSource for MemoryFrameSource {
    fn image(&self, original_index: u64) -> Result<Vec<u8>, FrameSourceError> {
        let below = self.images.range(..=original_index).next_back();
        let above = self.images.range(original_index..).next();
        let hit = match (below, above) {
            (Some(b), Some(a)) if a.0 - original_index < original_index - b.0 => a,
            (Some(b), _) => b,
            (None, Some(a)) => a,
            (None, None) => return Err(FrameSourceError::Empty),
        };
        Ok(hit.1.clone())
    }
}
