//! Baseline samplers (uniform count, fixed rate) and the interval algebra
//! used to build and sample a refined timeline.

use thiserror::Error;

use crate::types::{FrameRef, Interval, RefinedTimeline};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SamplingError {
    #[error("frame sequence is empty")]
    EmptySequence,
    #[error("timeline contains no frames")]
    EmptyTimeline,
    #[error("sampling rate must be positive and finite")]
    BadRate,
}

/// Stratified uniform sampling of `budget` positions out of `total_frames`.
///
/// Position `k` is `floor((k + 0.5) * total / budget)`, evaluated in exact
/// integer arithmetic. Duplicates (budget > total) collapse, so the result
/// always has `min(budget, total)` strictly increasing entries.
pub fn uniform_sample(total_frames: u64, budget: u64) -> Vec<u64> {
    if total_frames == 0 || budget == 0 {
        return Vec::new();
    }
    let total = total_frames as u128;
    let budget_wide = budget as u128;
    let mut out: Vec<u64> = Vec::with_capacity(budget.min(total_frames) as usize);
    for k in 0..budget_wide {
        let idx = ((2 * k + 1) * total / (2 * budget_wide)).min(total - 1) as u64;
        if out.last() != Some(&idx) {
            out.push(idx);
        }
    }
    out
}

/// Fixed-rate sampling: for each target time `k / rate_hz` up to the last
/// timestamp, keep the frame with the nearest timestamp (earlier frame on
/// ties).
pub fn fps_sample(frames: &[FrameRef], rate_hz: f64) -> Result<Vec<FrameRef>, SamplingError> {
    if frames.is_empty() {
        return Err(SamplingError::EmptySequence);
    }
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(SamplingError::BadRate);
    }
    let last_us = frames[frames.len() - 1].timestamp_us as f64;
    let mut out: Vec<FrameRef> = Vec::new();
    let mut cursor = 0usize;
    for k in 0u64.. {
        let target = k as f64 * 1e6 / rate_hz;
        if target > last_us {
            break;
        }
        while cursor + 1 < frames.len() && (frames[cursor + 1].timestamp_us as f64) <= target {
            cursor += 1;
        }
        let mut pick = cursor;
        if let Some(next) = frames.get(cursor + 1) {
            let below = (target - frames[cursor].timestamp_us as f64).abs();
            let above = next.timestamp_us as f64 - target;
            if above < below {
                pick = cursor + 1;
            }
        }
        if out.last() != Some(&frames[pick]) {
            out.push(frames[pick]);
        }
    }
    Ok(out)
}

/// Canonical union of intervals: sorted, with overlapping or abutting
/// (`end + 1 == start`) intervals merged.
pub fn merge_intervals(raw: &[Interval]) -> RefinedTimeline {
    let mut sorted = raw.to_vec();
    sorted.sort_unstable();
    let mut merged: Vec<Interval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match merged.last_mut() {
            Some(last) if iv.start <= last.end.saturating_add(1) => {
                last.end = last.end.max(iv.end);
            }
            _ => merged.push(iv),
        }
    }
    RefinedTimeline::from_canonical(merged)
}

/// Uniformly samples the virtual concatenation of a timeline's intervals and
/// maps each virtual position back to its original frame index.
pub fn sample_timeline(timeline: &RefinedTimeline, budget: u64) -> Result<Vec<u64>, SamplingError> {
    if timeline.total_frames() == 0 {
        return Err(SamplingError::EmptyTimeline);
    }
    let positions = uniform_sample(timeline.total_frames(), budget);
    let mut out = Vec::with_capacity(positions.len());
    let mut intervals = timeline.intervals().iter();
    let mut current = intervals.next().copied();
    let mut offset = 0u64;
    for pos in positions {
        while let Some(iv) = current {
            if pos < offset + iv.len() {
                break;
            }
            offset += iv.len();
            current = intervals.next().copied();
        }
        let iv = current.expect("position lies within total_frames");
        out.push(iv.start + (pos - offset));
    }
    Ok(out)
}
