//! Content-adaptive frame selection.
//!
//! Consecutive-frame cosine distances are scanned for strict local maxima,
//! each maximum is kept only if its topographic prominence clears a
//! threshold, and the surviving peaks cut the video into segments whose
//! midpoints become the representative frames (r-frames).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{cosine, FeatureSequence};

/// Peaks must rise strictly more than this above their surroundings.
pub const DEFAULT_PROMINENCE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CafsError {
    #[error("need at least 2 frames, got {0}")]
    TooShort(usize),
    #[error("frame at position {0} has a zero feature vector")]
    DegenerateVector(usize),
    #[error("peak position {position} is outside 1..={max}")]
    BadPeak { position: usize, max: usize },
    #[error("unknown boundary mode {0:?} (expected strict or padded)")]
    UnknownBoundaryMode(String),
}

/// `values[i]` is the distance between frames `i` and `i + 1` (0-based).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceSequence {
    pub values: Vec<f64>,
}

/// A prominent distance peak. `position` is 1-based into the distance
/// sequence, so `d[position - 1]` is its height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub position: usize,
    pub prominence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Only segments between two detected peaks.
    Strict,
    /// Virtual peaks at the first and last sampled frame, so segments tile
    /// the whole video.
    #[default]
    Padded,
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMode::Strict => "strict",
            BoundaryMode::Padded => "padded",
        })
    }
}

impl FromStr for BoundaryMode {
    type Err = CafsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(BoundaryMode::Strict),
            "padded" => Ok(BoundaryMode::Padded),
            other => Err(CafsError::UnknownBoundaryMode(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RFrame {
    #[serde(rename = "frame")]
    pub frame_index: u64,
    #[serde(rename = "left_peak")]
    pub left_peak_frame: u64,
    #[serde(rename = "right_peak")]
    pub right_peak_frame: u64,
}

/// Peak as written to disk, with its frame resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    pub distance_pos: usize,
    pub frame: u64,
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RFrameSet {
    pub boundary_mode: BoundaryMode,
    pub rframes: Vec<RFrame>,
    #[serde(default)]
    pub peaks: Vec<PeakRecord>,
}

impl RFrameSet {
    pub fn len(&self) -> usize {
        self.rframes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rframes.is_empty()
    }

    pub fn frame_indices(&self) -> Vec<u64> {
        self.rframes.iter().map(|r| r.frame_index).collect()
    }
}

/// `d_i = 1 - cos(V_i, V_{i+1})`, clamped to `[0, 2]`.
pub fn compute_distances(features: &FeatureSequence) -> Result<DistanceSequence, CafsError> {
    if features.len() < 2 {
        return Err(CafsError::TooShort(features.len()));
    }
    let vectors = features.vectors();
    let mut values = Vec::with_capacity(vectors.len() - 1);
    for (i, pair) in vectors.windows(2).enumerate() {
        let sim = cosine(&pair[0], &pair[1]).ok_or_else(|| {
            let zero = if pair[0].iter().all(|&x| x == 0.0) { i } else { i + 1 };
            CafsError::DegenerateVector(zero)
        })?;
        values.push((1.0 - sim).clamp(0.0, 2.0));
    }
    Ok(DistanceSequence { values })
}

/// Strict local maxima over 1-based positions `2..=len-1` whose prominence
/// exceeds `threshold`.
///
/// Prominence walks outward from the peak while values stay `<=` the peak
/// height, tracking the lowest value seen on each side; the peak height
/// minus the higher of the two minima is the prominence.
pub fn detect_peaks(distances: &DistanceSequence, threshold: f64) -> Vec<Peak> {
    let d = &distances.values;
    let n = d.len();
    if n < 3 {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    // 0-based i here is 1-based position i + 1
    for i in 1..n - 1 {
        let h = d[i];
        if !(d[i - 1] < h && h > d[i + 1]) {
            continue;
        }
        let mut left_min = h;
        for &v in d[..i].iter().rev() {
            if v > h {
                break;
            }
            left_min = left_min.min(v);
        }
        let mut right_min = h;
        for &v in &d[i + 1..] {
            if v > h {
                break;
            }
            right_min = right_min.min(v);
        }
        let prominence = h - left_min.max(right_min);
        if prominence > threshold {
            peaks.push(Peak {
                position: i + 1,
                prominence,
            });
        }
    }
    peaks
}

/// Turns peaks into r-frames. Peak `p` sits on frame `I_p`, the earlier of
/// the two frames its distance straddles; each segment between consecutive
/// peaks contributes the frame `floor((I_a + I_b) / 2)`.
pub fn select_rframes(
    peaks: &[Peak],
    features: &FeatureSequence,
    boundary_mode: BoundaryMode,
) -> Result<RFrameSet, CafsError> {
    let frames = features.frames();
    let max = frames.len().saturating_sub(1);
    let mut records = Vec::with_capacity(peaks.len());
    for p in peaks {
        if p.position == 0 || p.position > max {
            return Err(CafsError::BadPeak {
                position: p.position,
                max,
            });
        }
        records.push(PeakRecord {
            distance_pos: p.position,
            frame: frames[p.position - 1].original_index,
            prominence: p.prominence,
        });
    }

    let mut cuts: Vec<u64> = Vec::with_capacity(records.len() + 2);
    if boundary_mode == BoundaryMode::Padded {
        cuts.extend(features.first_index());
    }
    cuts.extend(records.iter().map(|r| r.frame));
    if boundary_mode == BoundaryMode::Padded {
        cuts.extend(features.last_index());
    }

    let rframes = cuts
        .windows(2)
        .map(|w| RFrame {
            frame_index: (w[0] + w[1]) / 2,
            left_peak_frame: w[0],
            right_peak_frame: w[1],
        })
        .collect();
    Ok(RFrameSet {
        boundary_mode,
        rframes,
        peaks: records,
    })
}

pub fn cafs(
    features: &FeatureSequence,
    threshold: f64,
    boundary_mode: BoundaryMode,
) -> Result<RFrameSet, CafsError> {
    let distances = compute_distances(features)?;
    let peaks = detect_peaks(&distances, threshold);
    select_rframes(&peaks, features, boundary_mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::FrameRef;

    fn seq_with_indices(indices: &[u64]) -> FeatureSequence {
        let frames = indices
            .iter()
            .map(|&i| FrameRef::new(i, i * 100_000))
            .collect();
        FeatureSequence::new(1, frames, vec![vec![1.0]; indices.len()], 2.0).unwrap()
    }

    fn blocks(lengths: &[usize]) -> FeatureSequence {
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
    fn distance_examples() {
        let s = FeatureSequence::from_vectors(vec![vec![1.0, 0.0]; 2], 2.0).unwrap();
        assert_eq!(compute_distances(&s).unwrap().values, vec![0.0]);

        let s = FeatureSequence::from_vectors(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 2.0).unwrap();
        assert_eq!(compute_distances(&s).unwrap().values, vec![1.0]);

        let h = std::f32::consts::FRAC_1_SQRT_2;
        let s = FeatureSequence::from_vectors(vec![vec![1.0, 0.0], vec![h, h]], 2.0).unwrap();
        let d = compute_distances(&s).unwrap().values[0];
        assert!((d - 0.292_893_218_813_452_4).abs() < 1e-6, "{d}");
    }

    #[test]
    fn distance_needs_two_frames() {
        let s = FeatureSequence::from_vectors(vec![vec![1.0]], 2.0).unwrap();
        assert_eq!(compute_distances(&s), Err(CafsError::TooShort(1)));
    }

    #[test]
    fn peak_examples() {
        let d = DistanceSequence {
            values: vec![0.05, 0.5, 0.05, 0.05, 0.3, 0.05],
        };
        let peaks = detect_peaks(&d, 0.1);
        assert_eq!(
            peaks.iter().map(|p| p.position).collect::<Vec<_>>(),
            vec![2, 5]
        );
        assert!((peaks[0].prominence - 0.45).abs() < 1e-12);
        assert!((peaks[1].prominence - 0.25).abs() < 1e-12);

        let flat = DistanceSequence {
            values: vec![0.4; 10],
        };
        assert!(detect_peaks(&flat, 0.1).is_empty());

        let small = DistanceSequence {
            values: vec![0.0, 0.05, 0.0],
        };
        assert!(detect_peaks(&small, 0.1).is_empty());
        assert_eq!(detect_peaks(&small, 0.0).len(), 1);
    }

    #[test]
    fn endpoints_are_never_peaks() {
        let d = DistanceSequence {
            values: vec![0.9, 0.0, 0.0, 0.9],
        };
        assert!(detect_peaks(&d, 0.1).is_empty());
    }

    #[test]
    fn rframes_strict_and_padded() {
        let f = seq_with_indices(&[10, 20, 30, 40, 50, 60, 70]);
        let peaks = [
            Peak {
                position: 2,
                prominence: 0.45,
            },
            Peak {
                position: 5,
                prominence: 0.25,
            },
        ];
        // positions 2 and 5 land on I_2 = 20 and I_5 = 50
        let strict = select_rframes(&peaks, &f, BoundaryMode::Strict).unwrap();
        assert_eq!(
            strict.rframes,
            vec![RFrame {
                frame_index: 35,
                left_peak_frame: 20,
                right_peak_frame: 50
            }]
        );
        let padded = select_rframes(&peaks, &f, BoundaryMode::Padded).unwrap();
        let bounds: Vec<_> = padded
            .rframes
            .iter()
            .map(|r| (r.frame_index, r.left_peak_frame, r.right_peak_frame))
            .collect();
        assert_eq!(bounds, vec![(15, 10, 20), (35, 20, 50), (60, 50, 70)]);
        assert_eq!(padded.peaks[1].frame, 50);
    }

    #[test]
    fn rframes_without_peaks() {
        let f = seq_with_indices(&(0..100).collect::<Vec<_>>());
        let padded = select_rframes(&[], &f, BoundaryMode::Padded).unwrap();
        assert_eq!(
            padded.rframes,
            vec![RFrame {
                frame_index: 49,
                left_peak_frame: 0,
                right_peak_frame: 99
            }]
        );
        let one = [Peak {
            position: 40,
            prominence: 1.0,
        }];
        assert!(select_rframes(&one, &f, BoundaryMode::Strict)
            .unwrap()
            .is_empty());
        assert!(select_rframes(&[], &f, BoundaryMode::Strict)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn rejects_out_of_range_peak() {
        let f = seq_with_indices(&[0, 1, 2]);
        let bad = [Peak {
            position: 3,
            prominence: 1.0,
        }];
        assert_eq!(
            select_rframes(&bad, &f, BoundaryMode::Padded),
            Err(CafsError::BadPeak {
                position: 3,
                max: 2
            })
        );
    }

    #[test]
    fn three_blocks_give_one_rframe_each() {
        let f = blocks(&[30, 30, 30]);
        let set = cafs(&f, 0.1, BoundaryMode::Padded).unwrap();
        let bounds: Vec<_> = set
            .rframes
            .iter()
            .map(|r| (r.frame_index, r.left_peak_frame, r.right_peak_frame))
            .collect();
        assert_eq!(bounds, vec![(14, 0, 29), (44, 29, 59), (74, 59, 89)]);
        assert!(set.peaks.iter().all(|p| p.prominence == 1.0));
    }

    #[test]
    fn identical_features() {
        let f = FeatureSequence::from_vectors(vec![vec![0.3, 0.4]; 50], 2.0).unwrap();
        let padded = cafs(&f, 0.1, BoundaryMode::Padded).unwrap();
        assert_eq!(padded.frame_indices(), vec![24]);
        assert!(cafs(&f, 0.1, BoundaryMode::Strict).unwrap().is_empty());
    }

    #[test]
    fn boundary_mode_parses() {
        assert_eq!("strict".parse::<BoundaryMode>(), Ok(BoundaryMode::Strict));
        assert_eq!(BoundaryMode::default().to_string(), "padded");
        assert!("loose".parse::<BoundaryMode>().is_err());
    }

    #[test]
    fn rframe_set_json_shape() {
        let f = blocks(&[4, 4]);
        let set = cafs(&f, 0.1, BoundaryMode::Padded).unwrap();
        let json = serde_json::to_value(&set).unwrap();
        assert_eq!(json["boundary_mode"], "padded");
        assert_eq!(json["rframes"][0]["frame"], 1);
        assert_eq!(json["rframes"][0]["left_peak"], 0);
        assert_eq!(json["rframes"][0]["right_peak"], 3);
        assert_eq!(json["peaks"][0]["distance_pos"], 4);
        assert_eq!(json["peaks"][0]["frame"], 3);
        assert_eq!(json["peaks"][0]["prominence"], 1.0);
    }
}
