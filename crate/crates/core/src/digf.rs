//! DIGF feature files.
//!
//! Little-endian layout:
//!
//! ```text
//! magic    "DIGF"
//! version  u32 = 1
//! dim      u32
//! count    u64
//! fps      f64
//! count × { original_index u64, timestamp_us u64, dim × f32 }
//! ```
//!
//! An optional JSON sidecar with the same stem carries
//! `{"video_path", "dim", "count"}` for humans. The binary file is
//! authoritative and the sidecar is never consulted when reading.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{FeatureSequence, FrameRef, SequenceError};

pub const MAGIC: [u8; 4] = *b"DIGF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

#[derive(Debug, Error)]
pub enum DigfError {
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("file truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: u64, found: u64 },
    #[error("{0} trailing bytes after the last record")]
    TrailingBytes(u64),
    #[error("record {position}: original index {index} does not exceed its predecessor")]
    NonMonotoneIndex { position: usize, index: u64 },
    #[error("invalid feature sequence: {0}")]
    Invalid(#[from] SequenceError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("sidecar: {0}")]
    Sidecar(#[from] serde_json::Error),
}

/// Human-readable companion file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub video_path: String,
    pub dim: usize,
    pub count: usize,
}

pub fn encode(seq: &FeatureSequence) -> Vec<u8> {
    let record_len = 16 + 4 * seq.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + record_len * seq.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(seq.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(seq.len() as u64).to_le_bytes());
    out.extend_from_slice(&seq.source_fps().to_le_bytes());
    for (frame, vector) in seq.frames().iter().zip(seq.vectors()) {
        out.extend_from_slice(&frame.original_index.to_le_bytes());
        out.extend_from_slice(&frame.timestamp_us.to_le_bytes());
        for x in vector {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let mut buf = [0u8; N];
        buf.copy_from_slice(&self.bytes[self.pos..self.pos + N]);
        self.pos += N;
        buf
    }
}

pub fn decode(bytes: &[u8]) -> Result<FeatureSequence, DigfError> {
    let found = bytes.len() as u64;
    if bytes.len() < 4 {
        return Err(DigfError::Truncated {
            needed: HEADER_LEN as u64,
            found,
        });
    }
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take::<4>();
    if magic != MAGIC {
        return Err(DigfError::BadMagic(magic));
    }
    if bytes.len() < 8 {
        return Err(DigfError::Truncated {
            needed: HEADER_LEN as u64,
            found,
        });
    }
    let version = u32::from_le_bytes(cur.take());
    if version != VERSION {
        return Err(DigfError::BadVersion(version));
    }
    if bytes.len() < HEADER_LEN {
        return Err(DigfError::Truncated {
            needed: HEADER_LEN as u64,
            found,
        });
    }
    let dim = u32::from_le_bytes(cur.take()) as usize;
    let count = u64::from_le_bytes(cur.take());
    let fps = f64::from_le_bytes(cur.take());

    let record_len = 16u64 + 4 * dim as u64;
    let needed = count
        .checked_mul(record_len)
        .and_then(|body| body.checked_add(HEADER_LEN as u64))
        .unwrap_or(u64::MAX);
    if found < needed {
        return Err(DigfError::Truncated { needed, found });
    }
    if found > needed {
        return Err(DigfError::TrailingBytes(found - needed));
    }

    let count = count as usize;
    let mut frames = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    for position in 0..count {
        let index = u64::from_le_bytes(cur.take());
        let timestamp = u64::from_le_bytes(cur.take());
        if let Some(prev) = frames.last().map(|f: &FrameRef| f.original_index) {
            if index <= prev {
                return Err(DigfError::NonMonotoneIndex { position, index });
            }
        }
        frames.push(FrameRef::new(index, timestamp));
        vectors.push((0..dim).map(|_| f32::from_le_bytes(cur.take())).collect());
    }
    Ok(FeatureSequence::new(dim, frames, vectors, fps)?)
}

pub fn write_to<W: Write>(seq: &FeatureSequence, mut w: W) -> Result<(), DigfError> {
    w.write_all(&encode(seq))?;
    Ok(())
}

pub fn read_from<R: Read>(mut r: R) -> Result<FeatureSequence, DigfError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn write_file(path: impl AsRef<Path>, seq: &FeatureSequence) -> Result<(), DigfError> {
    fs::write(path, encode(seq))?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<FeatureSequence, DigfError> {
    decode(&fs::read(path)?)
}

/// `clip.digf` -> `clip.json`.
pub fn sidecar_path(path: impl AsRef<Path>) -> PathBuf {
    path.as_ref().with_extension("json")
}

pub fn write_sidecar(
    path: impl AsRef<Path>,
    seq: &FeatureSequence,
    video_path: &str,
) -> Result<(), DigfError> {
    let sidecar = Sidecar {
        video_path: video_path.to_owned(),
        dim: seq.dim(),
        count: seq.len(),
    };
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}
