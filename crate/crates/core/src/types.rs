//! Domain types shared by every stage: frame references, feature sequences
//! and frame-index intervals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nominal sampling rate of the candidate frame stream.
pub const DEFAULT_CANDIDATE_FPS: f64 = 2.0;

/// A sampled frame, addressed by its index in the source video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameRef {
    pub original_index: u64,
    pub timestamp_us: u64,
}

impl FrameRef {
    pub fn new(original_index: u64, timestamp_us: u64) -> Self {
        Self {
            original_index,
            timestamp_us,
        }
    }

    pub fn timestamp_s(&self) -> f64 {
        self.timestamp_us as f64 / 1e6
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("feature dimension must be positive")]
    ZeroDim,
    #[error("{frames} frames but {vectors} vectors")]
    LengthMismatch { frames: usize, vectors: usize },
    #[error("vector {position} has length {len}, expected {dim}")]
    WrongDim {
        position: usize,
        len: usize,
        dim: usize,
    },
    #[error("vector {position} is all zeros or non-finite")]
    DegenerateVector { position: usize },
    #[error("frame {position} does not strictly follow its predecessor")]
    NonMonotone { position: usize },
    #[error("source fps must be positive and finite, got {0}")]
    BadFps(f64),
}

/// Per-frame embedding vectors for a sampled candidate stream.
///
/// Construction validates every invariant, so downstream code can assume
/// equal lengths, nonzero vectors and strictly increasing frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    dim: usize,
    frames: Vec<FrameRef>,
    vectors: Vec<Vec<f32>>,
    source_fps: f64,
}

impl FeatureSequence {
    pub fn new(
        dim: usize,
        frames: Vec<FrameRef>,
        vectors: Vec<Vec<f32>>,
        source_fps: f64,
    ) -> Result<Self, SequenceError> {
        if dim == 0 {
            return Err(SequenceError::ZeroDim);
        }
        if frames.len() != vectors.len() {
            return Err(SequenceError::LengthMismatch {
                frames: frames.len(),
                vectors: vectors.len(),
            });
        }
        if !(source_fps.is_finite() && source_fps > 0.0) {
            return Err(SequenceError::BadFps(source_fps));
        }
        for (position, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(SequenceError::WrongDim {
                    position,
                    len: v.len(),
                    dim,
                });
            }
            if v.iter().any(|x| !x.is_finite()) || v.iter().all(|&x| x == 0.0) {
                return Err(SequenceError::DegenerateVector { position });
            }
        }
        for (position, pair) in frames.windows(2).enumerate() {
            if pair[1].original_index <= pair[0].original_index
                || pair[1].timestamp_us <= pair[0].timestamp_us
            {
                return Err(SequenceError::NonMonotone {
                    position: position + 1,
                });
            }
        }
        Ok(Self {
            dim,
            frames,
            vectors,
            source_fps,
        })
    }

    /// Frames numbered `0..vectors.len()` spaced evenly at `fps`.
    pub fn from_vectors(vectors: Vec<Vec<f32>>, fps: f64) -> Result<Self, SequenceError> {
        let dim = vectors.first().map_or(0, Vec::len);
        let frames = (0..vectors.len() as u64)
            .map(|i| FrameRef::new(i, (i as f64 * 1e6 / fps).round() as u64))
            .collect();
        Self::new(dim, frames, vectors, fps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[FrameRef] {
        &self.frames
    }

    pub fn vectors(&self) -> &[Vec<f32>] {
        &self.vectors
    }

    pub fn vector(&self, position: usize) -> &[f32] {
        &self.vectors[position]
    }

    pub fn source_fps(&self) -> f64 {
        self.source_fps
    }

    pub fn first_index(&self) -> Option<u64> {
        self.frames.first().map(|f| f.original_index)
    }

    pub fn last_index(&self) -> Option<u64> {
        self.frames.last().map(|f| f.original_index)
    }

    /// Position of the frame whose original index is closest to `index`;
    /// ties resolve to the earlier frame.
    pub fn nearest_position(&self, index: u64) -> Option<usize> {
        if self.frames.is_empty() {
            return None;
        }
        let after = self.frames.partition_point(|f| f.original_index < index);
        if after == 0 {
            return Some(0);
        }
        if after == self.frames.len() {
            return Some(after - 1);
        }
        let below = index - self.frames[after - 1].original_index;
        let above = self.frames[after].original_index - index;
        Some(if above < below { after } else { after - 1 })
    }

    /// Timestamp for an arbitrary original index, linearly interpolated
    /// between the bracketing sampled frames and clamped at the ends.
    pub fn timestamp_of(&self, index: u64) -> Option<u64> {
        let first = self.frames.first()?;
        let last = self.frames.last()?;
        if index <= first.original_index {
            return Some(first.timestamp_us);
        }
        if index >= last.original_index {
            return Some(last.timestamp_us);
        }
        let after = self.frames.partition_point(|f| f.original_index < index);
        let hi = self.frames[after];
        if hi.original_index == index {
            return Some(hi.timestamp_us);
        }
        let lo = self.frames[after - 1];
        let span = (hi.original_index - lo.original_index) as f64;
        let frac = (index - lo.original_index) as f64 / span;
        Some(lo.timestamp_us + ((hi.timestamp_us - lo.timestamp_us) as f64 * frac).round() as u64)
    }

    pub fn duration_s(&self) -> f64 {
        self.frames.last().map_or(0.0, FrameRef::timestamp_s)
    }
}

/// Inclusive range of original frame indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: u64,
    pub end: u64,
}

#[allow(clippy::len_without_is_empty)]
impl Interval {
    /// Returns `None` when `start > end`.
    pub fn new(start: u64, end: u64) -> Option<Self> {
        (start <= end).then_some(Self { start, end })
    }

    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn contains(&self, index: u64) -> bool {
        self.start <= index && index <= self.end
    }
}

/// Canonical sorted, disjoint, non-touching set of intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RefinedTimeline {
    intervals: Vec<Interval>,
    total_frames: u64,
}

impl RefinedTimeline {
    /// Caller guarantees the intervals are already canonical.
    pub(crate) fn from_canonical(intervals: Vec<Interval>) -> Self {
        let total_frames = intervals.iter().map(Interval::len).sum();
        Self {
            intervals,
            total_frames,
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn total_frames(&self) -> u64 {
        self.total_frames
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, index: u64) -> bool {
        let after = self.intervals.partition_point(|iv| iv.end < index);
        self.intervals
            .get(after)
            .is_some_and(|iv| iv.contains(index))
    }
}

/// Cosine similarity in f64, clamped to `[-1, 1]`.
///
/// Uses `dot / sqrt(|a|² |b|²)` so that a vector compared with itself
/// yields exactly 1.0. Returns `None` when either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> Option<f64> {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb).sqrt()).clamp(-1.0, 1.0))
}
