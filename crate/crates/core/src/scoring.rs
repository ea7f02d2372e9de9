//! Relevance rewards in `[0, 100]` for r-frames.
//!
//! Three providers share one trait: a chat model that looks at the frame
//! image, an embedding-similarity scorer, and a lookup-table mock.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::cafs::RFrameSet;
use crate::chat::{extract_json_object, ChatClient, ChatError, ChatRequest, RetryPolicy};
use crate::frames::FrameSource;
use crate::types::{cosine, FeatureSequence};

const REWARD_TEMPLATE: &str = r#"You are a reward model for a video-based question-answering system.

Task

You will receive a question and a sampled video frame. Your task is to evaluate the relevance of this frame for answering the question. Please assign a reward score that indicates how useful or informative the provided frame is in the context of the given question.

Instructions for Analysis and Response

In your analysis, please perform the following steps to finish your evaluation:

1. Describe the visual content of the sampled frame, focusing on elements relevant to the question, if such elements are present.

2. Assign a relevance reward between 0 and 100 based on: (1) The sampled frame's direct usefulness in answering the question (2) Whether the frame suggests that adjacent frames might provide additional information that help answer the question more effectively.

Please provide your answer in the following format:
{"description": str, "reward": int}.

User Input

Video Duration: {duration} seconds;
Sampled Frame Timestamp: {timestamp} seconds;
Question: {question}"#;

pub const MIN_REWARD: f64 = 0.0;
pub const MAX_REWARD: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("timestamp {timestamp}s outside video of {duration}s")]
    BadTimestamp { timestamp: f64, duration: f64 },
    #[error("no JSON object in reward response")]
    NoJson,
    #[error("reward response has no numeric reward field")]
    MissingField,
    #[error("reward {0} outside [0, 100]")]
    OutOfRange(f64),
    #[error("zero vector in similarity scoring")]
    DegenerateVector,
    #[error("embedding dimension {got} does not match text embedding {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("frame image unavailable: {0}")]
    Frame(String),
    #[error(transparent)]
    Chat(#[from] ChatError),
    #[error("no r-frame could be scored: {0}")]
    ProviderDown(String),
}

/// Everything a provider may need to score one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRequest {
    pub query: String,
    pub frame_index: u64,
    pub frame_image: Option<Vec<u8>>,
    pub frame_embedding: Option<Vec<f32>>,
    pub frame_timestamp_s: f64,
    pub video_duration_s: f64,
}

pub trait RewardProvider: Send + Sync {
    /// Short name recorded alongside the rewards.
    fn tag(&self) -> &str;

    /// Whether [`ScoreRequest::frame_image`] must be filled in.
    fn needs_image(&self) -> bool {
        false
    }

    fn score(&self, request: &ScoreRequest) -> Result<f64, ScoreError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    pub values: Vec<f64>,
    pub provider_tag: String,
}

impl RewardVector {
    pub fn new(values: Vec<f64>, provider_tag: impl Into<String>) -> Result<Self, ScoreError> {
        if let Some(&bad) = values.iter().find(|v| !(MIN_REWARD..=MAX_REWARD).contains(*v)) {
            return Err(ScoreError::OutOfRange(bad));
        }
        Ok(Self {
            values,
            provider_tag: provider_tag.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn build_reward_prompt(req: &ScoreRequest) -> Result<String, ScoreError> {
    if req.query.trim().is_empty() {
        return Err(ScoreError::EmptyQuery);
    }
    if !(req.frame_timestamp_s >= 0.0 && req.frame_timestamp_s <= req.video_duration_s) {
        return Err(ScoreError::BadTimestamp {
            timestamp: req.frame_timestamp_s,
            duration: req.video_duration_s,
        });
    }
    Ok(REWARD_TEMPLATE
        .replace("{duration}", &format!("{:.1}", req.video_duration_s))
        .replace("{timestamp}", &format!("{:.1}", req.frame_timestamp_s))
        .replace("{question}", &req.query))
}

pub fn parse_reward_response(text: &str) -> Result<f64, ScoreError> {
    let obj = extract_json_object(text).map_err(|_| ScoreError::NoJson)?;
    let reward = obj
        .get("reward")
        .and_then(Value::as_f64)
        .ok_or(ScoreError::MissingField)?;
    if !(MIN_REWARD..=MAX_REWARD).contains(&reward) {
        return Err(ScoreError::OutOfRange(reward));
    }
    Ok(reward)
}

/// `100 * max(0, cos(text, image))`.
pub fn embed_sim_score(text_vec: &[f32], image_vec: &[f32]) -> Result<f64, ScoreError> {
    if text_vec.len() != image_vec.len() {
        return Err(ScoreError::DimMismatch {
            expected: text_vec.len(),
            got: image_vec.len(),
        });
    }
    let sim = cosine(text_vec, image_vec).ok_or(ScoreError::DegenerateVector)?;
    Ok(MAX_REWARD * sim.max(0.0))
}

/// Asks a multimodal chat model to rate the frame image.
pub struct ChatRewardProvider<C> {
    client: C,
}

impl<C: ChatClient> ChatRewardProvider<C> {
    pub fn new(client: C) -> Self {
        Self { client }
    }
}

impl<C: ChatClient> RewardProvider for ChatRewardProvider<C> {
    fn tag(&self) -> &str {
        "lmm"
    }

    fn needs_image(&self) -> bool {
        true
    }

    fn score(&self, request: &ScoreRequest) -> Result<f64, ScoreError> {
        let prompt = build_reward_prompt(request)?;
        let mut chat = ChatRequest::text(prompt);
        if let Some(image) = &request.frame_image {
            chat = chat.with_image(image.clone());
        }
        let text = self.client.complete(&chat)?;
        parse_reward_response(&text)
    }
}

/// Scores frames by cosine similarity between a query embedding and the
/// frame's feature vector.
#[derive(Debug, Clone)]
pub struct EmbeddingRewardProvider {
    text_vec: Vec<f32>,
}

impl EmbeddingRewardProvider {
    pub fn new(text_vec: Vec<f32>) -> Result<Self, ScoreError> {
        if text_vec.iter().all(|&x| x == 0.0) {
            return Err(ScoreError::DegenerateVector);
        }
        Ok(Self { text_vec })
    }
}

impl RewardProvider for EmbeddingRewardProvider {
    fn tag(&self) -> &str {
        "embed"
    }

    fn score(&self, request: &ScoreRequest) -> Result<f64, ScoreError> {
        let image = request
            .frame_embedding
            .as_deref()
            .ok_or(ScoreError::DegenerateVector)?;
        embed_sim_score(&self.text_vec, image)
    }
}

/// Fixed reward per original frame index, `default` elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRewardProvider {
    #[serde(default)]
    pub default: f64,
    #[serde(default)]
    pub frames: BTreeMap<u64, f64>,
}

impl MockRewardProvider {
    pub fn new(default: f64, frames: impl IntoIterator<Item = (u64, f64)>) -> Self {
        Self {
            default,
            frames: frames.into_iter().collect(),
        }
    }
}

impl RewardProvider for MockRewardProvider {
    fn tag(&self) -> &str {
        "mock"
    }

    fn score(&self, request: &ScoreRequest) -> Result<f64, ScoreError> {
        let reward = self
            .frames
            .get(&request.frame_index)
            .copied()
            .unwrap_or(self.default);
        if !(MIN_REWARD..=MAX_REWARD).contains(&reward) {
            return Err(ScoreError::OutOfRange(reward));
        }
        Ok(reward)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePolicy {
    pub retry: RetryPolicy,
    /// Maximum number of concurrent provider calls.
    pub parallelism: usize,
    /// Reward given to a frame whose retries are exhausted.
    pub default_reward: f64,
}

impl Default for ScorePolicy {
    fn default() -> Self {
        Self {
            retry: RetryPolicy::default(),
            parallelism: 4,
            default_reward: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOutcome {
    pub rewards: RewardVector,
    pub warnings: Vec<String>,
}

fn build_request(
    query: &str,
    frame_index: u64,
    features: &FeatureSequence,
    provider: &dyn RewardProvider,
    frame_source: Option<&dyn FrameSource>,
) -> Result<ScoreRequest, ScoreError> {
    let frame_image = if provider.needs_image() {
        let source = frame_source.ok_or_else(|| ScoreError::Frame("no frame source".into()))?;
        Some(
            source
                .image(frame_index)
                .map_err(|e| ScoreError::Frame(e.to_string()))?,
        )
    } else {
        None
    };
    let frame_embedding = features
        .nearest_position(frame_index)
        .map(|p| features.vector(p).to_vec());
    let timestamp_us = features.timestamp_of(frame_index).unwrap_or(0);
    Ok(ScoreRequest {
        query: query.to_owned(),
        frame_index,
        frame_image,
        frame_embedding,
        frame_timestamp_s: timestamp_us as f64 / 1e6,
        video_duration_s: features.duration_s(),
    })
}

/// One reward per r-frame, in r-frame order.
///
/// Up to `policy.parallelism` frames are scored at once. Each frame gets
/// `policy.retry` attempts; a frame that still fails receives
/// `policy.default_reward` and a warning. If every frame fails the call
/// returns [`ScoreError::ProviderDown`].
pub fn score_rframes(
    rframes: &RFrameSet,
    query: &str,
    features: &FeatureSequence,
    provider: &dyn RewardProvider,
    frame_source: Option<&dyn FrameSource>,
    policy: &ScorePolicy,
) -> Result<ScoreOutcome, ScoreError> {
    if query.trim().is_empty() {
        return Err(ScoreError::EmptyQuery);
    }
    let indices = rframes.frame_indices();
    let score_one = |frame_index: u64| {
        policy.retry.run(|| {
            let request = build_request(query, frame_index, features, provider, frame_source)?;
            let reward = provider.score(&request)?;
            if !(MIN_REWARD..=MAX_REWARD).contains(&reward) {
                return Err(ScoreError::OutOfRange(reward));
            }
            Ok(reward)
        })
    };

    let workers = policy.parallelism.clamp(1, indices.len().max(1));
    let next = AtomicUsize::new(0);
    let mut results: Vec<Option<Result<f64, ScoreError>>> = vec![None; indices.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let slot = next.fetch_add(1, Ordering::Relaxed);
                        let Some(&frame_index) = indices.get(slot) else {
                            break;
                        };
                        done.push((slot, score_one(frame_index)));
                    }
                    done
                })
            })
            .collect();
        for handle in handles {
            for (slot, result) in handle.join().expect("scoring worker panicked") {
                results[slot] = Some(result);
            }
        }
    });

    let mut values = Vec::with_capacity(indices.len());
    let mut warnings = Vec::new();
    let mut failures = 0usize;
    let mut last_error = None;
    for (frame_index, result) in indices.iter().zip(results) {
        match result.expect("every slot is scored") {
            Ok(v) => values.push(v),
            Err(e) => {
                failures += 1;
                log::warn!("scoring r-frame {frame_index} failed: {e}");
                warnings.push(format!(
                    "r-frame {frame_index}: scoring failed ({e}); assigned default reward {}",
                    policy.default_reward
                ));
                values.push(policy.default_reward);
                last_error = Some(e);
            }
        }
    }
    if failures > 0 && failures == indices.len() {
        let reason = last_error.map(|e| e.to_string()).unwrap_or_default();
        return Err(ScoreError::ProviderDown(reason));
    }
    Ok(ScoreOutcome {
        rewards: RewardVector::new(values, provider.tag())?,
        warnings,
    })
}
