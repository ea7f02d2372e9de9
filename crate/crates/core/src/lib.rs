//! Query-aware frame selection for long videos.
//!
//! A video arrives as a [`FeatureSequence`] of per-frame embeddings. Global
//! queries are answered from a uniform sample; localized queries go through
//! content-adaptive r-frame extraction ([`cafs`]), per-r-frame relevance
//! scoring ([`scoring`]) and reward-guided refinement ([`refine`]).

pub mod cafs;
pub mod chat;
pub mod classify;
pub mod digf;
pub mod frames;
pub mod metrics;
pub mod pipeline;
pub mod refine;
pub mod sampling;
pub mod scoring;
pub mod synthetic;
pub mod types;

pub use cafs::{
    cafs, compute_distances, detect_peaks, select_rframes, BoundaryMode, CafsError,
    DistanceSequence, Peak, PeakRecord, RFrame, RFrameSet, DEFAULT_PROMINENCE_THRESHOLD,
};
pub use chat::{ChatClient, ChatError, ChatRequest, EndpointConfig, HttpChatClient, RetryPolicy};
pub use classify::{classify_query, Classification, ClassifyError, QueryKind, QueryLabel};
pub use digf::DigfError;
pub use frames::{DirFrameSource, FrameSource, FrameSourceError, MemoryFrameSource};
pub use metrics::{glc, glc_frames, loc, loc_frames, CoverageScore, MetricsError, DEFAULT_GLC_SAMPLES};
pub use pipeline::{
    answer_query, dig_select, PipelineConfig, PipelineError, Providers, SelectionReport, Strategy,
};
pub use refine::{
    build_segments, iterative_select, refine_video, RefineError, RefineOutcome, SelectionTrace,
    DEFAULT_WLEN,
};
pub use sampling::{fps_sample, merge_intervals, sample_timeline, uniform_sample, SamplingError};
pub use scoring::{
    score_rframes, ChatRewardProvider, EmbeddingRewardProvider, MockRewardProvider,
    RewardProvider, RewardVector, ScoreError, ScorePolicy, ScoreRequest,
};
pub use types::{
    cosine, FeatureSequence, FrameRef, Interval, RefinedTimeline, SequenceError,
    DEFAULT_CANDIDATE_FPS,
};
