#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use framesieve::chat::{EndpointConfig, HttpChatClient, RetryPolicy};
use framesieve::frames::MemoryFrameSource;
use framesieve::pipeline::PipelineConfig;
use framesieve::FeatureSequence;
use serde_json::{json, Value};

/// Prominence by definition: the lowest value reachable on each side
/// without crossing anything taller than the peak. Scans every prefix and
/// suffix from scratch, so it is quadratic and shares no code with the
/// library's outward walk.
pub fn oracle_peaks(d: &[f64], threshold: f64) -> Vec<(usize, f64)> {
    let n = d.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let h = d[i];
        if !(d[i - 1] < h && d[i + 1] < h) {
            continue;
        }
        let mut barrier_left = None;
        for (k, &v) in d.iter().enumerate().take(i) {
            if v > h {
                barrier_left = Some(k);
            }
        }
        let lo = barrier_left.map_or(0, |k| k + 1);
        let left_min = d[lo..=i].iter().copied().fold(f64::INFINITY, f64::min);

        let hi = (i + 1..n).find(|&k| d[k] > h).unwrap_or(n);
        let right_min = d[i..hi].iter().copied().fold(f64::INFINITY, f64::min);

        let prominence = h - left_min.max(right_min);
        if prominence > threshold {
            out.push((i + 1, prominence));
        }
    }
    out
}

/// Orthogonal one-hot blocks, one per entry of `lengths`.
pub fn blocks(lengths: &[usize]) -> FeatureSequence {
    let dim = lengths.len().max(2);
    let mut vectors = Vec::new();
    for (b, &len) in lengths.iter().enumerate() {
        let mut v = vec![0.0f32; dim];
        v[b] = 1.0;
        vectors.extend(std::iter::repeat_n(v, len));
    }
    FeatureSequence::from_vectors(vectors, 2.0).unwrap()
}

pub fn chat_reply(content: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

pub fn prompt_text(body: &Value) -> &str {
    body["messages"][0]["content"][0]["text"]
        .as_str()
        .unwrap_or_default()
}

pub fn image_count(body: &Value) -> usize {
    body["messages"][0]["content"]
        .as_array()
        .map_or(0, |parts| parts.iter().filter(|p| p["type"] == "image_url").count())
}

/// Minimal chat-completions endpoint. Counts every request it receives.
pub struct StubServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
    _mock: mockito::Mock,
    _server: mockito::ServerGuard,
}

impl StubServer {
    pub fn start(handler: impl Fn(&Value) -> (u16, String) + Send + Sync + 'static) -> Self {
        let mut server = mockito::Server::new();
        let hits = Arc::new(AtomicUsize::new(0));
        let handler = Arc::new(handler);
        let parse = |req: &mockito::Request| -> Value {
            req.body()
                .ok()
                .and_then(|b| serde_json::from_slice(b).ok())
                .unwrap_or(Value::Null)
        };
        let mock = {
            let (status_handler, body_handler) = (Arc::clone(&handler), handler);
            let counter = Arc::clone(&hits);
            server
                .mock("POST", "/v1/chat/completions")
                .with_header("content-type", "application/json")
                .with_status_code_from_request(move |req| {
                    counter.fetch_add(1, Ordering::SeqCst);
                    status_handler(&parse(req)).0 as usize
                })
                .with_body_from_request(move |req| body_handler(&parse(req)).1.into_bytes())
                .create()
        };
        Self {
            url: format!("{}/v1/chat/completions", server.url()),
            hits,
            _mock: mock,
            _server: server,
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn client(&self) -> HttpChatClient {
        let mut config = EndpointConfig::new(&self.url, "stub-model");
        config.timeout_ms = 5_000;
        HttpChatClient::new(config)
    }
}

pub const GOLDEN_QUERY: &str = "What colour is the kettle on the stove?";

/// Four orthogonal blocks: frames 0-19, 20-44, 45-59, 60-89 at 2 fps.
pub fn golden_features() -> FeatureSequence {
    blocks(&[20, 25, 15, 30])
}

pub fn golden_frames() -> MemoryFrameSource {
    MemoryFrameSource {
        images: (0..90u64)
            .map(|i| (i, format!("jpeg-bytes-{i}").into_bytes()))
            .collect(),
    }
}

/// Canned rewards keyed by the timestamp the prompt mentions.
pub fn golden_rewards() -> BTreeMap<&'static str, u32> {
    BTreeMap::from([("4.5", 20), ("15.5", 85), ("25.5", 40), ("37.0", 10)])
}

pub fn golden_stub(global: bool) -> StubServer {
    let rewards = golden_rewards();
    StubServer::start(move |body| {
        let text = prompt_text(body);
        if text.contains("User Query:") {
            let verdict = json!({
                "analysis_step1": "asks about one object",
                "analysis_step2": "a cooking video",
                "analysis_step3": "the kettle",
                "analysis_step4": "specific referent",
                "isGlobal": global,
            });
            return (200, chat_reply(&format!("Sure.\n{verdict}")));
        }
        let ts = text
            .split("Sampled Frame Timestamp: ")
            .nth(1)
            .and_then(|rest| rest.split(' ').next())
            .unwrap_or_default();
        match rewards.get(ts) {
            Some(r) if image_count(body) == 1 => (
                200,
                chat_reply(&format!(
                    "{{\"description\": \"frame at {ts}s\", \"reward\": {r}}}"
                )),
            ),
            _ => (400, "{\"error\": \"unexpected request\"}".into()),
        }
    })
}

pub fn golden_config() -> PipelineConfig {
    PipelineConfig {
        wlen: 1,
        budget: 8,
        retry: RetryPolicy::no_wait(2),
        ..PipelineConfig::default()
    }
}

pub fn golden_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden_report.json")
}

pub fn run_golden(stub: &StubServer, config: &PipelineConfig) -> framesieve::SelectionReport {
    use framesieve::pipeline::{dig_select, Providers};
    use framesieve::scoring::ChatRewardProvider;

    let features = golden_features();
    let frames = golden_frames();
    let classifier = stub.client();
    let scorer = ChatRewardProvider::new(stub.client());
    dig_select(
        &features,
        Some(&frames),
        GOLDEN_QUERY,
        config,
        Providers {
            classifier: Some(&classifier),
            scorer: &scorer,
        },
    )
    .unwrap()
}

pub fn report_json(report: &framesieve::SelectionReport) -> String {
    serde_json::to_string_pretty(&report.without_timings()).unwrap() + "\n"
}

/// Detector output versus the oracle, bit for bit.
pub fn check_peaks(d: &[f64], threshold: f64) -> Result<(), String> {
    use framesieve::cafs::{detect_peaks, DistanceSequence};
    let got: Vec<(usize, u64)> = detect_peaks(&DistanceSequence { values: d.to_vec() }, threshold)
        .into_iter()
        .map(|p| (p.position, p.prominence.to_bits()))
        .collect();
    let want: Vec<(usize, u64)> = oracle_peaks(d, threshold)
        .into_iter()
        .map(|(pos, prom)| (pos, prom.to_bits()))
        .collect();
    if got == want {
        Ok(())
    } else {
        Err(format!("detector {got:?} != oracle {want:?} on {d:?}"))
    }
}

fn selected_of(values: &[f64]) -> std::collections::BTreeSet<usize> {
    let rewards = framesieve::RewardVector::new(values.to_vec(), "prop").unwrap();
    framesieve::iterative_select(&rewards).unwrap().final_selected
}

/// Termination, shrinkage and top-k structure of one selection run, plus
/// invariance under the given shift and scale (both must keep values in
/// `[0, 100]`).
pub fn check_selection(values: &[f64], shift: f64, scale: f64) -> Result<(), String> {
    let rewards = framesieve::RewardVector::new(values.to_vec(), "prop").unwrap();
    let trace = framesieve::iterative_select(&rewards).map_err(|e| e.to_string())?;
    let n = values.len();
    if trace.iterations.len() > n + 1 {
        return Err(format!("{} iterations for {n} rewards", trace.iterations.len()));
    }
    let mut previous: std::collections::BTreeSet<usize> =
        (0..n).filter(|&j| values[j] > 0.0).collect();
    for it in &trace.iterations {
        if !it.surviving.is_subset(&previous) {
            return Err(format!("surviving set grew: {previous:?} -> {:?}", it.surviving));
        }
        previous = it.surviving.clone();
    }
    let sel = &trace.final_selected;
    if trace.fallback_used {
        let first = values[0];
        if values.iter().any(|&v| v != first) || sel.iter().copied().collect::<Vec<_>>() != [0] {
            return Err(format!("unexpected fallback on {values:?} -> {sel:?}"));
        }
    } else {
        for &j in sel {
            for k in (0..n).filter(|k| !sel.contains(k)) {
                if values[j] <= values[k] {
                    return Err(format!("selected {j} ({}) <= unselected {k} ({})", values[j], values[k]));
                }
            }
        }
    }
    let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
    if &selected_of(&shifted) != sel {
        return Err(format!("shift {shift} changed the selection of {values:?}"));
    }
    let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
    if &selected_of(&scaled) != sel {
        return Err(format!("scale {scale} changed the selection of {values:?}"));
    }
    Ok(())
}

/// Largest shift range and scale that keep `values` inside `[0, 100]`.
pub fn shift_bounds(values: &[f64]) -> (f64, f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_scale = if hi > 0.0 { 100.0 / hi } else { 2.0 };
    (-lo, 100.0 - hi, max_scale)
}

pub fn check_glc_monotone(
    features: &FeatureSequence,
    chosen: &[u64],
    extra: u64,
    samples: usize,
    seed: u64,
) -> Result<(), String> {
    let base = framesieve::glc_frames(features, chosen, samples, seed).unwrap().value;
    let mut more = chosen.to_vec();
    more.push(extra);
    let grown = framesieve::glc_frames(features, &more, samples, seed).unwrap().value;
    if grown >= base {
        Ok(())
    } else {
        Err(format!("adding {extra} to {chosen:?} lowered GlC {base} -> {grown}"))
    }
}
