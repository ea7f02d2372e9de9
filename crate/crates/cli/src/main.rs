mod args;

use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use framesieve::cafs::{cafs, RFrameSet};
use framesieve::chat::{EndpointConfig, HttpChatClient, RetryPolicy};
use framesieve::classify::{classify_query, ClassifyError, ClassifyPolicy};
use framesieve::frames::{DirFrameSource, FrameSource};
use framesieve::pipeline::{answer_query, dig_select, PipelineConfig, Providers, SelectedFrame};
use framesieve::refine::{refine_video, SelectionTrace};
use framesieve::scoring::{
    score_rframes, ChatRewardProvider, EmbeddingRewardProvider, MockRewardProvider,
    RewardProvider, RewardVector, ScoreError, ScorePolicy,
};
use framesieve::synthetic::{
    compare, rframe_ladder, seed_range, write_csv, CompareGrid, EvalSettings, SyntheticParams,
};
use framesieve::{digf, glc, loc, FeatureSequence, Interval};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use args::*;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Provider(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Provider(_) => 3,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn input<E: Display>(context: impl Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(input(path.display()))?;
    serde_json::from_str(&text).map_err(input(path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(input(path.display()))?;
    text.push('\n');
    fs::write(path, text).map_err(input(path.display()))
}

fn read_features(path: &Path) -> CliResult<FeatureSequence> {
    digf::read_file(path).map_err(input(path.display()))
}

fn retry_policy(args: &EndpointArgs) -> RetryPolicy {
    RetryPolicy {
        attempts: args.attempts.max(1),
        ..RetryPolicy::default()
    }
}

fn chat_client(args: &EndpointArgs) -> CliResult<HttpChatClient> {
    let url = args.endpoint.clone().ok_or_else(|| {
        CliError::Input(format!(
            "no endpoint: pass --endpoint or set {}",
            framesieve::chat::ENDPOINT_ENV
        ))
    })?;
    let mut config = EndpointConfig::new(url, &args.model).with_env_key();
    config.timeout_ms = args.timeout_ms;
    Ok(HttpChatClient::new(config))
}

struct Scorer {
    provider: Box<dyn RewardProvider>,
    frames: Option<DirFrameSource>,
}

fn build_scorer(args: &ScorerArgs, endpoint: &EndpointArgs) -> CliResult<Scorer> {
    let frames = args
        .frames
        .as_ref()
        .map(|dir| DirFrameSource::open(dir).map_err(input(dir.display())))
        .transpose()?;
    let provider: Box<dyn RewardProvider> = match args.scorer {
        ScorerKind::Lmm => {
            if frames.is_none() {
                return Err(CliError::Input("the lmm scorer needs --frames".into()));
            }
            Box::new(ChatRewardProvider::new(chat_client(endpoint)?))
        }
        ScorerKind::Embed => {
            let path = args
                .text_vec
                .as_ref()
                .ok_or_else(|| CliError::Input("the embed scorer needs --text-vec".into()))?;
            let vec: Vec<f32> = read_json(path)?;
            Box::new(EmbeddingRewardProvider::new(vec).map_err(input(path.display()))?)
        }
        ScorerKind::Mock => {
            let path = args
                .mock_map
                .as_ref()
                .ok_or_else(|| CliError::Input("the mock scorer needs --mock-map".into()))?;
            let mock: MockRewardProvider = read_json(path)?;
            Box::new(mock)
        }
    };
    Ok(Scorer { provider, frames })
}

impl Scorer {
    fn frame_source(&self) -> Option<&dyn FrameSource> {
        self.frames.as_ref().map(|f| f as &dyn FrameSource)
    }
}

fn check_scorer_flags(args: &ScorerArgs) -> CliResult {
    if !(0.0..=100.0).contains(&args.default_reward) {
        return Err(CliError::Input("--default-reward must lie in [0, 100]".into()));
    }
    Ok(())
}

fn classify(args: ClassifyArgs) -> CliResult {
    let client = chat_client(&args.endpoint)?;
    let policy = ClassifyPolicy {
        retry: retry_policy(&args.endpoint),
        fail_hard: args.fail_hard,
    };
    let out = classify_query(&args.query, &client, &policy).map_err(|e| match e {
        ClassifyError::ProviderDown(_) => CliError::Provider(e.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    if let Some(w) = &out.warning {
        eprintln!("warning: {w}");
    }
    let json = serde_json::to_string_pretty(&out.label).map_err(input("label"))?;
    println!("{json}");
    Ok(())
}

fn run_cafs(args: CafsArgs) -> CliResult {
    let features = read_features(&args.features)?;
    let set = cafs(&features, args.segment.threshold, args.segment.boundary)
        .map_err(input(args.features.display()))?;
    write_json(&args.out, &set)?;
    println!(
        "{} peaks, {} r-frames ({} mode) -> {}",
        set.peaks.len(),
        set.len(),
        set.boundary_mode,
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct RewardsFile {
    #[serde(flatten)]
    rewards: RewardVector,
    #[serde(default)]
    warnings: Vec<String>,
}

fn run_score(args: ScoreArgs) -> CliResult {
    check_scorer_flags(&args.scorer)?;
    let features = read_features(&args.features)?;
    let rframes: RFrameSet = read_json(&args.rframes)?;
    let scorer = build_scorer(&args.scorer, &args.endpoint)?;
    let policy = ScorePolicy {
        retry: retry_policy(&args.endpoint),
        parallelism: args.scorer.parallelism,
        default_reward: args.scorer.default_reward,
    };
    let outcome = score_rframes(
        &rframes,
        &args.query,
        &features,
        scorer.provider.as_ref(),
        scorer.frame_source(),
        &policy,
    );
    let file = match outcome {
        Ok(out) => RewardsFile {
            rewards: out.rewards,
            warnings: out.warnings,
        },
        Err(ScoreError::ProviderDown(reason)) if !args.scorer.fail_hard => RewardsFile {
            rewards: RewardVector::new(
                vec![args.scorer.default_reward; rframes.len()],
                scorer.provider.tag(),
            )
            .map_err(input("default reward"))?,
            warnings: vec![format!(
                "every r-frame failed to score ({reason}); all assigned default reward {}",
                args.scorer.default_reward
            )],
        },
        Err(e @ ScoreError::ProviderDown(_)) => return Err(CliError::Provider(e.to_string())),
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    for w in &file.warnings {
        eprintln!("warning: {w}");
    }
    write_json(&args.out, &file)?;
    println!(
        "scored {} r-frames with {} -> {}",
        file.rewards.len(),
        file.rewards.provider_tag,
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct RefineFile {
    selection_trace: SelectionTrace,
    refined_intervals: Vec<Interval>,
    selected_frames: Vec<SelectedFrame>,
}

fn run_refine(args: RefineArgs) -> CliResult {
    if args.budget == 0 {
        return Err(CliError::Input("--budget must be at least 1".into()));
    }
    let rframes: RFrameSet = read_json(&args.rframes)?;
    let rewards: RewardVector = read_json(&args.rewards)?;
    let rewards = RewardVector::new(rewards.values, rewards.provider_tag)
        .map_err(input(args.rewards.display()))?;
    let out = refine_video(&rframes, &rewards, args.wlen, args.budget).map_err(input("refine"))?;
    let file = RefineFile {
        selection_trace: out.trace,
        refined_intervals: out.timeline.intervals().to_vec(),
        selected_frames: out
            .frames
            .iter()
            .map(|&index| SelectedFrame {
                index,
                timestamp_us: None,
            })
            .collect(),
    };
    write_json(&args.out, &file)?;
    println!(
        "selected {} frames from {} refined frames -> {}",
        file.selected_frames.len(),
        out.timeline.total_frames(),
        args.out.display()
    );
    Ok(())
}

#[derive(Deserialize)]
struct Manifest {
    total_frames: Option<u64>,
}

fn manifest_total_frames(features: &Path) -> Option<u64> {
    let path = features.with_extension("manifest.json");
    let text = fs::read_to_string(path).ok()?;
    serde_json::from_str::<Manifest>(&text).ok()?.total_frames
}

fn run_select(args: SelectArgs) -> CliResult {
    check_scorer_flags(&args.scorer)?;
    let features = read_features(&args.features)?;
    let scorer = build_scorer(&args.scorer, &args.endpoint)?;
    let classifier = match (args.label, &args.endpoint.endpoint) {
        (None, Some(_)) => Some(chat_client(&args.endpoint)?),
        _ => None,
    };
    let config = PipelineConfig {
        prominence_threshold: args.segment.threshold,
        wlen: args.wlen,
        budget: args.budget,
        boundary_mode: args.segment.boundary,
        total_frames: args
            .total_frames
            .or_else(|| manifest_total_frames(&args.features)),
        forced_label: args.label.map(Into::into),
        retry: retry_policy(&args.endpoint),
        parallelism: args.scorer.parallelism,
        default_reward: args.scorer.default_reward,
        fail_hard: args.scorer.fail_hard,
        ..PipelineConfig::default()
    };
    let report = dig_select(
        &features,
        scorer.frame_source(),
        &args.query,
        &config,
        Providers {
            classifier: classifier.as_ref().map(|c| c as _),
            scorer: scorer.provider.as_ref(),
        },
    )
    .map_err(|e| {
        if e.is_provider_error() {
            CliError::Provider(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    })?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_json(&args.out, &report)?;
    let strategy = serde_json::to_value(report.strategy_used).map_err(input("report"))?;
    println!(
        "{:?} query, strategy {}, {} r-frames, frames {:?} -> {}",
        report.query_label.kind,
        strategy.as_str().unwrap_or_default(),
        report.rframes.len(),
        report.frame_indices(),
        args.out.display()
    );
    Ok(())
}

fn run_metrics(args: MetricsArgs) -> CliResult {
    if args.samples == 0 {
        return Err(CliError::Input("--samples must be at least 1".into()));
    }
    let features = read_features(&args.features)?;
    let rframes: RFrameSet = read_json(&args.rframes)?;
    let (name, score) = match args.metric {
        MetricKind::Loc => ("loc", loc(&features, &rframes)),
        MetricKind::Glc => ("glc", glc(&features, &rframes, args.samples, args.seed)),
    };
    let score = score.map_err(input(name))?;
    let out = serde_json::json!({
        "metric": name,
        "value": score.value,
        "samples": score.sample_count,
        "seed": score.seed,
    });
    println!("{out}");
    Ok(())
}

fn run_bench(args: BenchArgs) -> CliResult {
    if args.trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let grid = CompareGrid {
        base: SyntheticParams {
            frames: args.frames,
            scenes: args.scenes,
            dim: args.dim,
            windows: args.windows,
            jitter: args.jitter,
            ..SyntheticParams::default()
        },
        strategies: args.strategies.clone(),
        budgets: args.budgets.clone(),
        rhos: args.rhos.clone(),
        sigmas: args.sigmas.clone(),
        settings: EvalSettings {
            wlen: args.wlen,
            ..EvalSettings::default()
        },
    };
    let seeds = seed_range(args.seed, args.trials);
    let rows = compare(&grid, &seeds).map_err(input("bench"))?;
    let file = fs::File::create(&args.out).map_err(input(args.out.display()))?;
    write_csv(&rows, file).map_err(input(args.out.display()))?;
    println!("strategy   budget  rho    sigma  recall         glc     loc");
    for r in &rows {
        println!(
            "{:<10} {:>6}  {:<5}  {:<5}  {:.3} ± {:.3}  {:.3}   {:.3}",
            r.strategy, r.budget, r.rho, r.sigma, r.recall_mean, r.recall_std, r.glc_mean, r.loc_mean
        );
    }
    if let Some(path) = &args.ladder_out {
        let scenes = if args.ladder_scenes.is_empty() {
            vec![5, 10, 20, 40]
        } else {
            args.ladder_scenes.clone()
        };
        let ladder = rframe_ladder(&scenes, &[args.frames], &seeds).map_err(input("ladder"))?;
        let file = fs::File::create(path).map_err(input(path.display()))?;
        write_csv(&ladder, file).map_err(input(path.display()))?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct SelectionFile {
    selected_frames: Vec<SelectedFrame>,
}

fn run_answer(args: AnswerArgs) -> CliResult {
    let selection: SelectionFile = read_json(&args.selection)?;
    let frames = DirFrameSource::open(&args.frames).map_err(input(args.frames.display()))?;
    let client = chat_client(&args.endpoint)?;
    let indices: Vec<u64> = selection.selected_frames.iter().map(|f| f.index).collect();
    let reply = answer_query(
        &indices,
        &frames,
        &args.query,
        &client,
        &retry_policy(&args.endpoint),
    )
    .map_err(|e| {
        if e.is_provider_error() {
            CliError::Provider(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    })?;
    println!("{reply}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    let result = match cli.command {
        Command::Classify(a) => classify(a),
        Command::Cafs(a) => run_cafs(a),
        Command::Score(a) => run_score(a),
        Command::Refine(a) => run_refine(a),
        Command::Select(a) => run_select(a),
        Command::Metrics(a) => run_metrics(a),
        Command::Bench(a) => run_bench(a),
        Command::Answer(a) => run_answer(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
