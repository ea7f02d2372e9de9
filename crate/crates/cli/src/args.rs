use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use framesieve::cafs::{BoundaryMode, DEFAULT_PROMINENCE_THRESHOLD};
use framesieve::chat::ENDPOINT_ENV;
use framesieve::classify::QueryKind;
use framesieve::metrics::DEFAULT_GLC_SAMPLES;
use framesieve::refine::DEFAULT_WLEN;
use framesieve::synthetic::EvalStrategy;

#[derive(Debug, Parser)]
#[command(name = "framesieve", version, about = "Query-aware frame selection for long videos")]
pub struct Cli {
    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label a query as global or localized.
    Classify(ClassifyArgs),
    /// Extract r-frames from a feature file.
    Cafs(CafsArgs),
    /// Score r-frames against a query.
    Score(ScoreArgs),
    /// Select frames from scored r-frames.
    Refine(RefineArgs),
    /// Run the whole pipeline.
    Select(SelectArgs),
    /// Coverage of an r-frame set.
    Metrics(MetricsArgs),
    /// Compare strategies on synthetic videos.
    Bench(BenchArgs),
    /// Ask a chat model the question over the selected frames.
    Answer(AnswerArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EndpointArgs {
    /// Chat-completions URL.
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,

    #[arg(long, default_value = "default")]
    pub model: String,

    #[arg(long, default_value_t = 60_000)]
    pub timeout_ms: u64,

    /// Attempts per request, including the first.
    #[arg(long, default_value_t = 3)]
    pub attempts: u32,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, short = 'Q')]
    pub query: String,

    #[command(flatten)]
    pub endpoint: EndpointArgs,

    /// Exit with status 3 instead of defaulting to localized.
    #[arg(long)]
    pub fail_hard: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    #[arg(long, default_value_t = DEFAULT_PROMINENCE_THRESHOLD)]
    pub threshold: f64,

    #[arg(long, default_value_t = BoundaryMode::Padded)]
    pub boundary: BoundaryMode,
}

#[derive(Debug, Args)]
pub struct CafsArgs {
    #[arg(long)]
    pub features: PathBuf,

    #[command(flatten)]
    pub segment: SegmentArgs,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerKind {
    Lmm,
    Embed,
    Mock,
}

#[derive(Debug, Clone, Args)]
pub struct ScorerArgs {
    #[arg(long, value_enum, default_value_t = ScorerKind::Lmm)]
    pub scorer: ScorerKind,

    /// JSON `{"default": x, "frames": {"<index>": reward}}` for the mock scorer.
    #[arg(long)]
    pub mock_map: Option<PathBuf>,

    /// JSON array holding the query embedding for the embed scorer.
    #[arg(long)]
    pub text_vec: Option<PathBuf>,

    /// Directory of frame images named by original frame index.
    #[arg(long)]
    pub frames: Option<PathBuf>,

    #[arg(long, default_value_t = 4)]
    pub parallelism: usize,

    /// Reward for frames whose scoring keeps failing.
    #[arg(long, default_value_t = 0.0)]
    pub default_reward: f64,

    /// Exit with status 3 when the scorer is unreachable.
    #[arg(long)]
    pub fail_hard: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub features: PathBuf,

    #[arg(long)]
    pub rframes: PathBuf,

    #[arg(long, short = 'Q')]
    pub query: String,

    #[command(flatten)]
    pub scorer: ScorerArgs,

    #[command(flatten)]
    pub endpoint: EndpointArgs,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub rframes: PathBuf,

    #[arg(long)]
    pub rewards: PathBuf,

    #[arg(long, default_value_t = DEFAULT_WLEN)]
    pub wlen: usize,

    #[arg(long)]
    pub budget: u64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub features: PathBuf,

    #[arg(long, short = 'Q')]
    pub query: String,

    #[command(flatten)]
    pub segment: SegmentArgs,

    #[command(flatten)]
    pub scorer: ScorerArgs,

    #[command(flatten)]
    pub endpoint: EndpointArgs,

    #[arg(long, default_value_t = DEFAULT_WLEN)]
    pub wlen: usize,

    #[arg(long)]
    pub budget: u64,

    /// Skip classification and route as this kind.
    #[arg(long, value_enum)]
    pub label: Option<LabelArg>,

    /// Frame count of the source video for the global route. Defaults to
    /// `total_frames` from `<features stem>.manifest.json` when present.
    #[arg(long)]
    pub total_frames: Option<u64>,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelArg {
    Global,
    Localized,
}

impl From<LabelArg> for QueryKind {
    fn from(label: LabelArg) -> Self {
        match label {
            LabelArg::Global => QueryKind::Global,
            LabelArg::Localized => QueryKind::Localized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Loc,
    Glc,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(value_enum)]
    pub metric: MetricKind,

    #[arg(long)]
    pub features: PathBuf,

    #[arg(long)]
    pub rframes: PathBuf,

    #[arg(long, default_value_t = DEFAULT_GLC_SAMPLES)]
    pub samples: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 20)]
    pub trials: usize,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, value_delimiter = ',', default_values_t = [16u64, 32])]
    pub budgets: Vec<u64>,

    #[arg(long, value_delimiter = ',', default_values_t = [0.1f64])]
    pub rhos: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_values_t = [0.0f64, 10.0])]
    pub sigmas: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_values = ["uni", "fps", "cafs_topk", "dig"])]
    pub strategies: Vec<EvalStrategy>,

    #[arg(long = "video-frames", default_value_t = 2000)]
    pub frames: usize,

    #[arg(long, default_value_t = 20)]
    pub scenes: usize,

    #[arg(long, default_value_t = 32)]
    pub dim: usize,

    #[arg(long, default_value_t = 1)]
    pub windows: usize,

    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,

    #[arg(long, default_value_t = DEFAULT_WLEN)]
    pub wlen: usize,

    /// Also write mean r-frame counts for these scene counts.
    #[arg(long, value_delimiter = ',')]
    pub ladder_scenes: Vec<usize>,

    #[arg(long)]
    pub ladder_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnswerArgs {
    /// A selection report or refine output.
    #[arg(long)]
    pub selection: PathBuf,

    #[arg(long)]
    pub frames: PathBuf,

    #[arg(long, short = 'Q')]
    pub query: String,

    #[command(flatten)]
    pub endpoint: EndpointArgs,
}
