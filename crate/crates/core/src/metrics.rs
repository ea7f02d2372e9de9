//! Coverage of a frame selection.
//!
//! LoC averages each chosen frame's similarity to four neighbours spread
//! across its local window; GlC averages, over randomly sampled frames, the
//! best similarity to any chosen frame.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cafs::RFrameSet;
use crate::types::{cosine, FeatureSequence};

pub const DEFAULT_GLC_SAMPLES: usize = 200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no frames to evaluate")]
    EmptySet,
    #[error("feature sequence is empty")]
    EmptyFeatures,
    #[error("sample count must be positive")]
    ZeroSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageScore {
    pub value: f64,
    pub sample_count: usize,
    pub seed: Option<u64>,
}

fn sim(features: &FeatureSequence, a: usize, b: usize) -> f64 {
    cosine(features.vector(a), features.vector(b)).expect("sequence vectors are nonzero")
}

/// Neighbour indices `round(I_i + (j - 1.5) * floor((I_{i+1} - I_{i-1}) / 6))`
/// for `j = 0..4`, clamped into the sampled range. The outer neighbours of
/// the first and last frame are the first and last sampled frame.
pub fn loc_neighbors(sorted: &[u64], i: usize, first: u64, last: u64) -> [u64; 4] {
    let prev = if i == 0 { first } else { sorted[i - 1] };
    let next = sorted.get(i + 1).copied().unwrap_or(last);
    let step = next.saturating_sub(prev) / 6;
    let center = sorted[i] as f64;
    std::array::from_fn(|j| {
        let m = (center + (j as f64 - 1.5) * step as f64).round();
        (m.max(first as f64) as u64).clamp(first, last)
    })
}

/// Localized coverage of a set of frame indices.
pub fn loc_frames(features: &FeatureSequence, frames: &[u64]) -> Result<CoverageScore, MetricsError> {
    if frames.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let (Some(first), Some(last)) = (features.first_index(), features.last_index()) else {
        return Err(MetricsError::EmptyFeatures);
    };
    let mut sorted = frames.to_vec();
    sorted.sort_unstable();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..sorted.len() {
        let center = features
            .nearest_position(sorted[i])
            .expect("features are non-empty");
        for m in loc_neighbors(&sorted, i, first, last) {
            let neighbor = features.nearest_position(m).expect("features are non-empty");
            total += sim(features, center, neighbor);
            count += 1;
        }
    }
    Ok(CoverageScore {
        value: total / count as f64,
        sample_count: count,
        seed: None,
    })
}

pub fn loc(features: &FeatureSequence, rframes: &RFrameSet) -> Result<CoverageScore, MetricsError> {
    loc_frames(features, &rframes.frame_indices())
}

/// Positions drawn for GlC: `min(sample_n, len)` distinct positions,
/// uniformly without replacement, in ascending order. Exhaustive (and
/// seed-independent) when `sample_n >= len`.
pub fn glc_sample_positions(len: usize, sample_n: usize, seed: u64) -> Vec<usize> {
    if sample_n >= len {
        return (0..len).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, len, sample_n).into_vec();
    picked.sort_unstable();
    picked
}

/// Global coverage of a set of frame indices.
pub fn glc_frames(
    features: &FeatureSequence,
    frames: &[u64],
    sample_n: usize,
    seed: u64,
) -> Result<CoverageScore, MetricsError> {
    if frames.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    if features.is_empty() {
        return Err(MetricsError::EmptyFeatures);
    }
    if sample_n == 0 {
        return Err(MetricsError::ZeroSamples);
    }
    let chosen: Vec<usize> = frames
        .iter()
        .map(|&f| features.nearest_position(f).expect("features are non-empty"))
        .collect();
    let samples = glc_sample_positions(features.len(), sample_n, seed);
    let total: f64 = samples
        .iter()
        .map(|&x| {
            chosen
                .iter()
                .map(|&c| sim(features, c, x))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    Ok(CoverageScore {
        value: total / samples.len() as f64,
        sample_count: samples.len(),
        seed: Some(seed),
    })
}

pub fn glc(
    features: &FeatureSequence,
    rframes: &RFrameSet,
    sample_n: usize,
    seed: u64,
) -> Result<CoverageScore, MetricsError> {
    glc_frames(features, &rframes.frame_indices(), sample_n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthogonal_blocks(lengths: &[usize]) -> FeatureSequence {
        let dim = lengths.len();
        let mut vectors = Vec::new();
        for (b, &len) in lengths.iter().enumerate() {
            let mut v = vec![0.0f32; dim];
            v[b] = 1.0;
            vectors.extend(std::iter::repeat_n(v, len));
        }
        FeatureSequence::from_vectors(vectors, 2.0).unwrap()
    }

    #[test]
    fn identical_features_score_one() {
        let f = FeatureSequence::from_vectors(vec![vec![0.1, 0.7, -0.3]; 60], 2.0).unwrap();
        assert_eq!(loc_frames(&f, &[5, 30, 50]).unwrap().value, 1.0);
        for seed in [0, 1, 99] {
            assert_eq!(glc_frames(&f, &[5], 20, seed).unwrap().value, 1.0);
        }
    }

    #[test]
    fn tiny_video_neighbors_collapse() {
        let f = FeatureSequence::from_vectors(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 2.0).unwrap();
        // step = floor(1 / 6) = 0, so every neighbour is the frame itself
        assert_eq!(loc_neighbors(&[0], 0, 0, 1), [0; 4]);
        assert_eq!(loc_frames(&f, &[0]).unwrap().value, 1.0);
    }

    #[test]
    fn neighbor_rounding_and_clamping() {
        // step = floor((25 - 5) / 6) = 3, offsets -4.5 -1.5 1.5 4.5
        assert_eq!(loc_neighbors(&[5, 15, 25], 1, 0, 29), [11, 14, 17, 20]);
        // first frame: I_0 = 0, step = floor(15 / 6) = 2, offsets -3 -1 1 3
        assert_eq!(loc_neighbors(&[5, 15, 25], 0, 0, 29), [2, 4, 6, 8]);
        // clamped at the end
        // step = floor(29 / 6) = 4, offsets -6 -2 2 6
        assert_eq!(loc_neighbors(&[0, 28], 1, 0, 29), [22, 26, 29, 29]);
    }

    #[test]
    fn glc_halves() {
        let f = orthogonal_blocks(&[50, 50]);
        assert_eq!(glc_frames(&f, &[10, 80], 100, 3).unwrap().value, 1.0);
        let half = glc_frames(&f, &[10], 100, 3).unwrap();
        assert!((half.value - 0.5).abs() < 1e-12);
        assert_eq!(half.sample_count, 100);
    }

    #[test]
    fn glc_sampling_is_seeded() {
        let a = glc_sample_positions(1000, 200, 7);
        assert_eq!(a.len(), 200);
        assert_eq!(a, glc_sample_positions(1000, 200, 7));
        assert_ne!(a, glc_sample_positions(1000, 200, 8));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(glc_sample_positions(5, 200, 1), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn errors() {
        let f = orthogonal_blocks(&[3]);
        assert_eq!(loc_frames(&f, &[]), Err(MetricsError::EmptySet));
        assert_eq!(glc_frames(&f, &[], 5, 0), Err(MetricsError::EmptySet));
        assert_eq!(glc_frames(&f, &[0], 0, 0), Err(MetricsError::ZeroSamples));
    }
}
