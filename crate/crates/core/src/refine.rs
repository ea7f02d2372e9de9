//! Reward-guided refinement.
//!
//! Rewards are repeatedly shifted down by their mean and floored at zero
//! until the set of positive entries stops changing. The surviving r-frames,
//! widened by `wlen` neighbours on each side, are unioned into a refined
//! timeline that is then sampled uniformly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cafs::RFrameSet;
use crate::sampling::{merge_intervals, sample_timeline, SamplingError};
use crate::scoring::RewardVector;
use crate::types::{Interval, RefinedTimeline};

/// Neighbouring r-frames absorbed on each side of a selected one.
pub const DEFAULT_WLEN: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RefineError {
    #[error("reward vector is empty")]
    EmptyRewards,
    #[error("no r-frames selected")]
    EmptySelection,
    #[error("r-frame position {position} out of range for {len} r-frames")]
    BadPosition { position: usize, len: usize },
    #[error("{rewards} rewards for {rframes} r-frames")]
    Misaligned { rewards: usize, rframes: usize },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub mean: f64,
    /// 0-based r-frame positions still positive after this update.
    pub surviving: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub iterations: Vec<Iteration>,
    /// 0-based r-frame positions.
    pub final_selected: BTreeSet<usize>,
    pub fallback_used: bool,
}

fn positives(values: &[f64]) -> BTreeSet<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Mean-threshold iteration to a fixed point.
///
/// Each round computes the mean over all current values (zeros included),
/// replaces every value by `max(v - mean, 0)`, and stops once the positive
/// set equals the previous round's (initially the positives of the input).
/// If nothing survives, the earliest maximal reward is selected instead.
pub fn iterative_select(rewards: &RewardVector) -> Result<SelectionTrace, RefineError> {
    let original = &rewards.values;
    if original.is_empty() {
        return Err(RefineError::EmptyRewards);
    }
    let mut current = original.clone();
    let mut previous = positives(&current);
    let mut iterations = Vec::new();
    loop {
        let mean = current.iter().sum::<f64>() / current.len() as f64;
        for v in &mut current {
            *v = (*v - mean).max(0.0);
        }
        let surviving = positives(&current);
        let done = surviving == previous;
        iterations.push(Iteration {
            mean,
            surviving: surviving.clone(),
        });
        if done {
            break;
        }
        previous = surviving;
    }

    let last = iterations
        .last()
        .map(|it| it.surviving.clone())
        .unwrap_or_default();
    if !last.is_empty() {
        return Ok(SelectionTrace {
            iterations,
            final_selected: last,
            fallback_used: false,
        });
    }
    let mut best = 0;
    for (j, &v) in original.iter().enumerate() {
        if v > original[best] {
            best = j;
        }
    }
    Ok(SelectionTrace {
        iterations,
        final_selected: BTreeSet::from([best]),
        fallback_used: true,
    })
}

/// Union of `[left peak of r-frame j-wlen, right peak of r-frame j+wlen]`
/// over the selected positions, with the window clamped to the r-frame
/// range.
pub fn build_segments(
    selected: &BTreeSet<usize>,
    rframes: &RFrameSet,
    wlen: usize,
) -> Result<RefinedTimeline, RefineError> {
    if selected.is_empty() {
        return Err(RefineError::EmptySelection);
    }
    let n = rframes.len();
    let mut raw = Vec::with_capacity(selected.len());
    for &j in selected {
        if j >= n {
            return Err(RefineError::BadPosition {
                position: j,
                len: n,
            });
        }
        let lo = j.saturating_sub(wlen);
        let hi = (j + wlen).min(n - 1);
        let start = rframes.rframes[lo].left_peak_frame;
        let end = rframes.rframes[hi].right_peak_frame;
        raw.push(Interval::new(start, end).expect("peak bounds are ordered"));
    }
    Ok(merge_intervals(&raw))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub frames: Vec<u64>,
    pub trace: SelectionTrace,
    pub timeline: RefinedTimeline,
}

pub fn refine_video(
    rframes: &RFrameSet,
    rewards: &RewardVector,
    wlen: usize,
    budget: u64,
) -> Result<RefineOutcome, RefineError> {
    if rframes.len() != rewards.len() {
        return Err(RefineError::Misaligned {
            rewards: rewards.len(),
            rframes: rframes.len(),
        });
    }
    let trace = iterative_select(rewards)?;
    let timeline = build_segments(&trace.final_selected, rframes, wlen)?;
    let frames = sample_timeline(&timeline, budget)?;
    Ok(RefineOutcome {
        frames,
        trace,
        timeline,
    })
}
