//! End-to-end selection: classify the query, then either sample the whole
//! video uniformly (global) or run CAFS, scoring and refinement (localized).

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cafs::{
    cafs, BoundaryMode, CafsError, PeakRecord, RFrame, RFrameSet, DEFAULT_PROMINENCE_THRESHOLD,
};
use crate::chat::{ChatClient, ChatError, ChatRequest, RetryPolicy};
use crate::classify::{classify_query, ClassifyError, ClassifyPolicy, QueryKind, QueryLabel};
use crate::frames::FrameSource;
use crate::refine::{refine_video, RefineError, SelectionTrace, DEFAULT_WLEN};
use crate::sampling::uniform_sample;
use crate::scoring::{score_rframes, RewardProvider, RewardVector, ScoreError, ScorePolicy};
use crate::types::{FeatureSequence, Interval, DEFAULT_CANDIDATE_FPS};

const ANSWER_INSTRUCTION: &str = "Please select the best answer from the options provided and directly provide the letter representing your choice without giving any explanation.";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("no frames selected")]
    EmptySelection,
    #[error("segmentation produced no r-frames")]
    NoRFrames,
    #[error("classification: {0}")]
    Classify(#[from] ClassifyError),
    #[error("cafs: {0}")]
    Cafs(#[from] CafsError),
    #[error("scoring: {0}")]
    Score(#[from] ScoreError),
    #[error("refine: {0}")]
    Refine(#[from] RefineError),
    #[error("frame source: {0}")]
    Frames(String),
    #[error("answer endpoint: {0}")]
    Chat(#[from] ChatError),
}

impl PipelineError {
    /// True for failures caused by an unreachable or misbehaving model
    /// endpoint rather than by bad input.
    pub fn is_provider_error(&self) -> bool {
        matches!(
            self,
            PipelineError::Classify(ClassifyError::ProviderDown(_))
                | PipelineError::Score(ScoreError::ProviderDown(_))
                | PipelineError::Chat(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub prominence_threshold: f64,
    pub wlen: usize,
    pub budget: u64,
    pub boundary_mode: BoundaryMode,
    /// Nominal rate of the candidate stream the features were taken from.
    pub candidate_fps: f64,
    /// Frame count of the source video, when known. The global route
    /// samples `0..total_frames` instead of the candidate stream.
    pub total_frames: Option<u64>,
    /// Skip the classifier and route as this kind.
    pub forced_label: Option<QueryKind>,
    pub retry: RetryPolicy,
    pub parallelism: usize,
    pub default_reward: f64,
    /// Turn provider failures into errors instead of degraded results.
    pub fail_hard: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            prominence_threshold: DEFAULT_PROMINENCE_THRESHOLD,
            wlen: DEFAULT_WLEN,
            budget: 32,
            boundary_mode: BoundaryMode::Padded,
            candidate_fps: DEFAULT_CANDIDATE_FPS,
            total_frames: None,
            forced_label: None,
            retry: RetryPolicy::default(),
            parallelism: 4,
            default_reward: 0.0,
            fail_hard: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.budget == 0 {
            return Err(PipelineError::BadConfig("budget must be at least 1".into()));
        }
        if !(self.prominence_threshold >= 0.0 && self.prominence_threshold.is_finite()) {
            return Err(PipelineError::BadConfig(
                "prominence threshold must be a non-negative number".into(),
            ));
        }
        if !(self.candidate_fps > 0.0 && self.candidate_fps.is_finite()) {
            return Err(PipelineError::BadConfig("candidate fps must be positive".into()));
        }
        if self.total_frames == Some(0) {
            return Err(PipelineError::BadConfig("total frame count must be positive".into()));
        }
        if !(0.0..=100.0).contains(&self.default_reward) {
            return Err(PipelineError::BadConfig("default reward must lie in [0, 100]".into()));
        }
        Ok(())
    }

    pub fn classify_policy(&self) -> ClassifyPolicy {
        ClassifyPolicy {
            retry: self.retry,
            fail_hard: self.fail_hard,
        }
    }

    pub fn score_policy(&self) -> ScorePolicy {
        ScorePolicy {
            retry: self.retry,
            parallelism: self.parallelism,
            default_reward: self.default_reward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Uniform,
    Dig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedFrame {
    pub index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_us: Option<u64>,
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub classify_ms: f64,
    pub cafs_ms: f64,
    pub score_ms: f64,
    pub refine_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub prominence_threshold: f64,
    pub wlen: usize,
    pub budget: u64,
    pub boundary_mode: BoundaryMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub query: String,
    pub query_label: QueryLabel,
    pub strategy_used: Strategy,
    pub config: ReportConfig,
    pub peaks: Vec<PeakRecord>,
    pub rframes: Vec<RFrame>,
    pub rewards: Option<RewardVector>,
    pub selection_trace: Option<SelectionTrace>,
    pub refined_intervals: Vec<Interval>,
    pub selected_frames: Vec<SelectedFrame>,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
}

impl SelectionReport {
    pub fn frame_indices(&self) -> Vec<u64> {
        self.selected_frames.iter().map(|f| f.index).collect()
    }

    /// Copy with timings zeroed, for byte-level comparisons.
    pub fn without_timings(&self) -> Self {
        Self {
            timings: StageTimings::default(),
            ..self.clone()
        }
    }

    pub fn rframe_set(&self) -> RFrameSet {
        RFrameSet {
            boundary_mode: self.config.boundary_mode,
            rframes: self.rframes.clone(),
            peaks: self.peaks.clone(),
        }
    }
}

/// The model endpoints a run talks to.
#[derive(Clone, Copy)]
pub struct Providers<'a> {
    /// `None` routes every unforced query through the classifier fallback.
    pub classifier: Option<&'a dyn ChatClient>,
    pub scorer: &'a dyn RewardProvider,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn with_timestamps(features: &FeatureSequence, indices: &[u64]) -> Vec<SelectedFrame> {
    indices
        .iter()
        .map(|&index| SelectedFrame {
            index,
            timestamp_us: features.timestamp_of(index),
        })
        .collect()
}

/// Uniform frames over the full video when its length is known, else over
/// the candidate stream.
pub fn global_frames(features: &FeatureSequence, total_frames: Option<u64>, budget: u64) -> Vec<u64> {
    match total_frames {
        Some(total) => uniform_sample(total, budget),
        None => uniform_sample(features.len() as u64, budget)
            .into_iter()
            .map(|p| features.frames()[p as usize].original_index)
            .collect(),
    }
}

pub fn dig_select(
    features: &FeatureSequence,
    frame_source: Option<&dyn FrameSource>,
    query: &str,
    config: &PipelineConfig,
    providers: Providers<'_>,
) -> Result<SelectionReport, PipelineError> {
    config.validate()?;
    if query.trim().is_empty() {
        return Err(PipelineError::EmptyQuery);
    }
    let mut timings = StageTimings::default();
    let mut warnings = Vec::new();

    let start = Instant::now();
    let query_label = match (config.forced_label, providers.classifier) {
        (Some(kind), _) => QueryLabel::fixed(kind),
        (None, Some(client)) => {
            let out = classify_query(query, client, &config.classify_policy())?;
            warnings.extend(out.warning);
            out.label
        }
        (None, None) => {
            if config.fail_hard {
                return Err(ClassifyError::ProviderDown("no classifier configured".into()).into());
            }
            warnings.push("no classifier configured; defaulted to localized".into());
            QueryLabel::fixed(QueryKind::Localized)
        }
    };
    timings.classify_ms = elapsed_ms(start);

    let report_config = ReportConfig {
        prominence_threshold: config.prominence_threshold,
        wlen: config.wlen,
        budget: config.budget,
        boundary_mode: config.boundary_mode,
    };

    if query_label.kind == QueryKind::Global {
        let indices = global_frames(features, config.total_frames, config.budget);
        return Ok(SelectionReport {
            query: query.to_owned(),
            query_label,
            strategy_used: Strategy::Uniform,
            config: report_config,
            peaks: Vec::new(),
            rframes: Vec::new(),
            rewards: None,
            selection_trace: None,
            refined_intervals: Vec::new(),
            selected_frames: with_timestamps(features, &indices),
            timings,
            warnings,
        });
    }

    let start = Instant::now();
    let rframes = cafs(features, config.prominence_threshold, config.boundary_mode)?;
    timings.cafs_ms = elapsed_ms(start);
    if rframes.is_empty() {
        return Err(PipelineError::NoRFrames);
    }

    let start = Instant::now();
    let rewards = match score_rframes(
        &rframes,
        query,
        features,
        providers.scorer,
        frame_source,
        &config.score_policy(),
    ) {
        Ok(outcome) => {
            warnings.extend(outcome.warnings);
            outcome.rewards
        }
        Err(ScoreError::ProviderDown(reason)) if !config.fail_hard => {
            warnings.push(format!(
                "every r-frame failed to score ({reason}); all assigned default reward {}",
                config.default_reward
            ));
            RewardVector::new(
                vec![config.default_reward; rframes.len()],
                providers.scorer.tag(),
            )?
        }
        Err(e) => return Err(e.into()),
    };
    timings.score_ms = elapsed_ms(start);

    let start = Instant::now();
    let refined = refine_video(&rframes, &rewards, config.wlen, config.budget)?;
    timings.refine_ms = elapsed_ms(start);
    if refined.trace.fallback_used {
        warnings.push("all rewards equal; selected the first highest-reward r-frame".into());
    }

    Ok(SelectionReport {
        query: query.to_owned(),
        query_label,
        strategy_used: Strategy::Dig,
        config: report_config,
        peaks: rframes.peaks,
        rframes: rframes.rframes,
        rewards: Some(rewards),
        selection_trace: Some(refined.trace),
        refined_intervals: refined.timeline.intervals().to_vec(),
        selected_frames: with_timestamps(features, &refined.frames),
        timings,
        warnings,
    })
}

pub fn build_answer_prompt(query: &str) -> String {
    format!("Question: {query}\n\n{ANSWER_INSTRUCTION}")
}

/// Sends the selected frames and the question to a chat model and returns
/// its raw reply.
pub fn answer_query(
    selected_frames: &[u64],
    frame_source: &dyn FrameSource,
    query: &str,
    client: &dyn ChatClient,
    retry: &RetryPolicy,
) -> Result<String, PipelineError> {
    if selected_frames.is_empty() {
        return Err(PipelineError::EmptySelection);
    }
    if query.trim().is_empty() {
        return Err(PipelineError::EmptyQuery);
    }
    let mut request = ChatRequest::text(build_answer_prompt(query));
    for &index in selected_frames {
        let image = frame_source
            .image(index)
            .map_err(|e| PipelineError::Frames(e.to_string()))?;
        request = request.with_image(image);
    }
    Ok(retry.run(|| client.complete(&request))?)
}
