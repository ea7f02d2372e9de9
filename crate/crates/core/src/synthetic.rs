//! Synthetic videos with planted relevant windows, and a harness that
//! compares selection strategies on them.
//!
//! Every scene is a constant (optionally jittered) unit vector, consecutive
//! scenes are orthogonal, and each planted window is exactly one scene.
//! Rewards come from an oracle instead of a model: `reward_hi` for r-frames
//! inside a window, `reward_lo` elsewhere, plus clamped Gaussian noise.

use std::fmt;
use std::io;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Pareto, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cafs::{cafs, BoundaryMode, RFrameSet, DEFAULT_PROMINENCE_THRESHOLD};
use crate::metrics::{glc_frames, loc_frames, DEFAULT_GLC_SAMPLES};
use crate::refine::{refine_video, DEFAULT_WLEN};
use crate::sampling::{fps_sample, uniform_sample};
use crate::scoring::RewardVector;
use crate::types::{FeatureSequence, Interval, DEFAULT_CANDIDATE_FPS};

/// Largest jitter for which intra-scene cosine distance stays below 0.1:
/// each jittered vector is within `asin(jitter)` of its scene direction, so
/// two of them differ by at most `1 - cos(2 asin(j)) = 2 j^2 = 0.08`.
pub const MAX_JITTER: f64 = 0.2;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub frames: usize,
    pub scenes: usize,
    pub dim: usize,
    /// Fraction of frames covered by planted windows.
    pub window_fraction: f64,
    pub windows: usize,
    pub min_scene_len: usize,
    /// Per-frame perturbation magnitude, at most [`MAX_JITTER`].
    pub jitter: f64,
    pub reward_hi: f64,
    pub reward_lo: f64,
    pub noise_sigma: f64,
    /// Pareto shape for scene lengths; smaller is heavier-tailed.
    pub length_shape: f64,
    pub fps: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            frames: 2000,
            scenes: 20,
            dim: 32,
            window_fraction: 0.1,
            windows: 1,
            min_scene_len: 4,
            jitter: 0.0,
            reward_hi: 90.0,
            reward_lo: 10.0,
            noise_sigma: 0.0,
            length_shape: 1.5,
            fps: DEFAULT_CANDIDATE_FPS,
        }
    }
}

impl SyntheticParams {
    fn window_total(&self) -> usize {
        (self.window_fraction * self.frames as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |msg: &str| Err(SyntheticError::BadParams(msg.to_owned()));
        if self.dim < 2 {
            return bad("dim must be at least 2");
        }
        if self.frames < 10 {
            return bad("need at least 10 frames");
        }
        if self.scenes == 0 {
            return bad("need at least one scene");
        }
        if self.min_scene_len < 2 {
            return bad("scenes must span at least 2 frames");
        }
        if !(0.0..=MAX_JITTER).contains(&self.jitter) {
            return bad("jitter must lie in [0, 0.2]");
        }
        if !(self.reward_hi > self.reward_lo
            || (self.reward_hi == self.reward_lo && self.windows > 0))
        {
            return bad("reward_hi must not be below reward_lo");
        }
        if !(0.0..=100.0).contains(&self.reward_lo) || !(0.0..=100.0).contains(&self.reward_hi) {
            return bad("rewards must lie in [0, 100]");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise sigma must be non-negative");
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad("fps must be positive");
        }
        if !(self.length_shape > 0.0 && self.length_shape.is_finite()) {
            return bad("length shape must be positive");
        }
        if !(0.0..1.0).contains(&self.window_fraction) {
            return bad("window fraction must lie in [0, 1)");
        }
        if self.windows >= self.scenes {
            return bad("need more scenes than windows");
        }
        let window_total = self.window_total();
        if self.windows > 0 && window_total < self.windows * self.min_scene_len {
            return bad("windows too short for the minimum scene length");
        }
        let others = self.scenes - self.windows;
        if self.frames < window_total + others * self.min_scene_len {
            return bad("too many scenes for the frame count");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub seed: u64,
    pub params: SyntheticParams,
    pub features: FeatureSequence,
    /// Inclusive `(start, end)` frame index of every scene, in order.
    pub scenes: Vec<Interval>,
    pub windows: Vec<Interval>,
}

impl SyntheticInstance {
    pub fn in_window(&self, frame: u64) -> bool {
        self.windows.iter().any(|w| w.contains(frame))
    }

    /// Oracle rewards for a set of r-frames. Noise is drawn from a stream
    /// derived from the instance seed, so repeated calls agree.
    pub fn oracle_rewards(&self, rframes: &RFrameSet) -> RewardVector {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_0f4e_3a4d);
        let noise = Normal::new(0.0, self.params.noise_sigma.max(f64::MIN_POSITIVE))
            .expect("sigma validated");
        let values = rframes
            .rframes
            .iter()
            .map(|r| {
                let base = if self.in_window(r.frame_index) {
                    self.params.reward_hi
                } else {
                    self.params.reward_lo
                };
                let jitter = if self.params.noise_sigma > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                (base + jitter).clamp(0.0, 100.0)
            })
            .collect();
        RewardVector::new(values, "oracle").expect("clamped into range")
    }
}

/// Splits `total` into parts proportional to `weights` (largest remainder).
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut parts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let short = total - parts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        parts[i] += 1;
    }
    parts
}

fn scene_vector(scene: usize, dim: usize, jitter: f64, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let mut v = vec![0.0f64; dim];
    v[scene % dim] = 1.0;
    if jitter > 0.0 {
        let mut u: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (vi, ui) in v.iter_mut().zip(&mut u) {
                *vi += jitter * *ui / norm;
            }
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| (x / norm) as f32).collect()
}

pub fn gen_instance(params: &SyntheticParams, seed: u64) -> Result<SyntheticInstance, SyntheticError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let window_total = params.window_total();
    let window_lengths: Vec<usize> = if params.windows == 0 {
        Vec::new()
    } else {
        apportion(window_total, &vec![1.0; params.windows])
    };

    let others = params.scenes - params.windows;
    let pareto = Pareto::new(1.0, params.length_shape).expect("shape validated");
    let weights: Vec<f64> = (0..others).map(|_| pareto.sample(&mut rng)).collect();
    let free = params.frames - window_total - others * params.min_scene_len;
    let other_lengths: Vec<usize> = apportion(free, &weights)
        .into_iter()
        .map(|extra| extra + params.min_scene_len)
        .collect();

    let mut window_slots = index::sample(&mut rng, params.scenes, params.windows).into_vec();
    window_slots.sort_unstable();

    let mut scenes = Vec::with_capacity(params.scenes);
    let mut windows = Vec::with_capacity(params.windows);
    let (mut next_window, mut next_other) = (0, 0);
    let mut start = 0u64;
    for slot in 0..params.scenes {
        let is_window = window_slots.get(next_window) == Some(&slot);
        let len = if is_window {
            next_window += 1;
            window_lengths[next_window - 1]
        } else {
            next_other += 1;
            other_lengths[next_other - 1]
        } as u64;
        let iv = Interval::new(start, start + len - 1).expect("scene length is positive");
        if is_window {
            windows.push(iv);
        }
        scenes.push(iv);
        start += len;
    }
    debug_assert_eq!(start as usize, params.frames);

    let mut vectors = Vec::with_capacity(params.frames);
    for (s, scene) in scenes.iter().enumerate() {
        for _ in 0..scene.len() {
            vectors.push(scene_vector(s, params.dim, params.jitter, &mut rng));
        }
    }
    let features = FeatureSequence::from_vectors(vectors, params.fps)
        .map_err(|e| SyntheticError::BadParams(e.to_string()))?;
    Ok(SyntheticInstance {
        seed,
        params: params.clone(),
        features,
        scenes,
        windows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStrategy {
    Uni,
    Fps,
    CafsTopk,
    Dig,
}

impl EvalStrategy {
    pub const ALL: [EvalStrategy; 4] = [
        EvalStrategy::Uni,
        EvalStrategy::Fps,
        EvalStrategy::CafsTopk,
        EvalStrategy::Dig,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvalStrategy::Uni => "uni",
            EvalStrategy::Fps => "fps",
            EvalStrategy::CafsTopk => "cafs_topk",
            EvalStrategy::Dig => "dig",
        }
    }
}

impl fmt::Display for EvalStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalStrategy {
    type Err = SyntheticError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| SyntheticError::UnknownStrategy(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub wlen: usize,
    pub prominence_threshold: f64,
    pub glc_samples: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            wlen: DEFAULT_WLEN,
            prominence_threshold: DEFAULT_PROMINENCE_THRESHOLD,
            glc_samples: DEFAULT_GLC_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub strategy: EvalStrategy,
    pub budget: u64,
    pub selected: Vec<u64>,
    /// Fraction of selected frames inside a planted window.
    pub recall: f64,
    /// Same as `recall`: the selection is a set, so both reduce to the
    /// in-window fraction.
    pub precision: f64,
    pub glc: f64,
    pub loc: f64,
    /// CAFS r-frames produced, for the strategies that run CAFS.
    pub rframe_count: Option<usize>,
    pub fallback_used: bool,
}

/// Top `k` r-frames by reward (earlier r-frame on ties), returned in
/// frame order.
fn top_k_rframes(rframes: &RFrameSet, rewards: &RewardVector, k: usize) -> Vec<u64> {
    let mut order: Vec<usize> = (0..rframes.len()).collect();
    order.sort_by(|&a, &b| rewards.values[b].total_cmp(&rewards.values[a]).then(a.cmp(&b)));
    let mut picked: Vec<u64> = order
        .into_iter()
        .take(k)
        .map(|j| rframes.rframes[j].frame_index)
        .collect();
    picked.sort_unstable();
    picked
}

pub fn evaluate(
    strategy: EvalStrategy,
    instance: &SyntheticInstance,
    budget: u64,
    settings: &EvalSettings,
) -> Result<EvalResult, SyntheticError> {
    if budget == 0 {
        return Err(SyntheticError::BadParams("budget must be at least 1".into()));
    }
    let features = &instance.features;
    let mut rframe_count = None;
    let mut fallback_used = false;
    let selected: Vec<u64> = match strategy {
        EvalStrategy::Uni => uniform_sample(features.len() as u64, budget)
            .into_iter()
            .map(|p| features.frames()[p as usize].original_index)
            .collect(),
        EvalStrategy::Fps => {
            let duration = features.len() as f64 / instance.params.fps;
            fps_sample(features.frames(), budget as f64 / duration)
                .map_err(|e| SyntheticError::BadParams(e.to_string()))?
                .into_iter()
                .map(|f| f.original_index)
                .collect()
        }
        EvalStrategy::CafsTopk | EvalStrategy::Dig => {
            let rframes = cafs(features, settings.prominence_threshold, BoundaryMode::Padded)
                .map_err(|e| SyntheticError::BadParams(e.to_string()))?;
            rframe_count = Some(rframes.len());
            let rewards = instance.oracle_rewards(&rframes);
            if strategy == EvalStrategy::CafsTopk {
                top_k_rframes(&rframes, &rewards, budget as usize)
            } else {
                let out = refine_video(&rframes, &rewards, settings.wlen, budget)
                    .map_err(|e| SyntheticError::BadParams(e.to_string()))?;
                fallback_used = out.trace.fallback_used;
                out.frames
            }
        }
    };

    let hits = selected.iter().filter(|&&f| instance.in_window(f)).count();
    let recall = hits as f64 / selected.len() as f64;
    let glc = glc_frames(features, &selected, settings.glc_samples, instance.seed)
        .map_err(|e| SyntheticError::BadParams(e.to_string()))?
        .value;
    let loc = loc_frames(features, &selected)
        .map_err(|e| SyntheticError::BadParams(e.to_string()))?
        .value;
    Ok(EvalResult {
        strategy,
        budget,
        selected,
        recall,
        precision: recall,
        glc,
        loc,
        rframe_count,
        fallback_used,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareGrid {
    pub base: SyntheticParams,
    pub strategies: Vec<EvalStrategy>,
    pub budgets: Vec<u64>,
    pub rhos: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub settings: EvalSettings,
}

impl Default for CompareGrid {
    fn default() -> Self {
        Self {
            base: SyntheticParams::default(),
            strategies: EvalStrategy::ALL.to_vec(),
            budgets: vec![16, 32],
            rhos: vec![0.1],
            sigmas: vec![0.0, 10.0],
            settings: EvalSettings::default(),
        }
    }
}

/// One CSV row: one strategy at one grid point, aggregated over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub strategy: EvalStrategy,
    pub budget: u64,
    pub rho: f64,
    pub sigma: f64,
    pub recall_mean: f64,
    pub recall_std: f64,
    pub glc_mean: f64,
    pub loc_mean: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Runs every strategy and budget on every `(rho, sigma, seed)` instance.
/// Rows are ordered by rho, sigma, budget, then strategy.
pub fn compare(grid: &CompareGrid, seeds: &[u64]) -> Result<Vec<CompareRow>, SyntheticError> {
    if seeds.is_empty() {
        return Err(SyntheticError::BadParams("need at least one seed".into()));
    }
    let mut rows = Vec::new();
    for &rho in &grid.rhos {
        for &sigma in &grid.sigmas {
            let params = SyntheticParams {
                window_fraction: rho,
                noise_sigma: sigma,
                ..grid.base.clone()
            };
            let instances = seeds
                .iter()
                .map(|&s| gen_instance(&params, s))
                .collect::<Result<Vec<_>, _>>()?;
            for &budget in &grid.budgets {
                for &strategy in &grid.strategies {
                    let results = instances
                        .iter()
                        .map(|inst| evaluate(strategy, inst, budget, &grid.settings))
                        .collect::<Result<Vec<_>, _>>()?;
                    let recalls: Vec<f64> = results.iter().map(|r| r.recall).collect();
                    let glcs: Vec<f64> = results.iter().map(|r| r.glc).collect();
                    let locs: Vec<f64> = results.iter().map(|r| r.loc).collect();
                    rows.push(CompareRow {
                        strategy,
                        budget,
                        rho,
                        sigma,
                        recall_mean: mean(&recalls),
                        recall_std: std_dev(&recalls),
                        glc_mean: mean(&glcs),
                        loc_mean: mean(&locs),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<W: io::Write, T: Serialize>(rows: &[T], out: W) -> Result<(), SyntheticError> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub scenes: usize,
    pub frames: usize,
    pub rframe_mean: f64,
}

/// Mean padded-CAFS r-frame count over seeds for every scene/frame count
/// combination, on jitter-free instances without windows.
pub fn rframe_ladder(
    scene_counts: &[usize],
    frame_counts: &[usize],
    seeds: &[u64],
) -> Result<Vec<LadderRow>, SyntheticError> {
    if seeds.is_empty() {
        return Err(SyntheticError::BadParams("need at least one seed".into()));
    }
    let mut rows = Vec::new();
    for &scenes in scene_counts {
        for &frames in frame_counts {
            let params = SyntheticParams {
                frames,
                scenes,
                dim: scenes.max(2),
                window_fraction: 0.0,
                windows: 0,
                ..SyntheticParams::default()
            };
            let mut counts = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let inst = gen_instance(&params, seed)?;
                let set = cafs(&inst.features, DEFAULT_PROMINENCE_THRESHOLD, BoundaryMode::Padded)
                    .map_err(|e| SyntheticError::BadParams(e.to_string()))?;
                counts.push(set.len() as f64);
            }
            rows.push(LadderRow {
                scenes,
                frames,
                rframe_mean: mean(&counts),
            });
        }
    }
    Ok(rows)
}

/// Convenience for seed lists `base, base + 1, ...`.
pub fn seed_range(base: u64, trials: usize) -> Vec<u64> {
    (0..trials as u64).map(|i| base.wrapping_add(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cafs::compute_distances;
    use crate::digf;

    #[test]
    fn generation_is_deterministic() {
        let p = SyntheticParams::default();
        let a = gen_instance(&p, 1).unwrap();
        let b = gen_instance(&p, 1).unwrap();
        assert_eq!(digf::encode(&a.features), digf::encode(&b.features));
        assert_eq!(a.scenes, b.scenes);
        let c = gen_instance(&p, 2).unwrap();
        assert_ne!(a.scenes, c.scenes);
    }

    #[test]
    fn jitter_free_scenes_give_boundary_distances_only() {
        let p = SyntheticParams {
            frames: 300,
            scenes: 5,
            dim: 8,
            ..SyntheticParams::default()
        };
        let inst = gen_instance(&p, 9).unwrap();
        let d = compute_distances(&inst.features).unwrap();
        assert_eq!(d.values.iter().filter(|&&x| x != 0.0).count(), 4);
    }

    #[test]
    fn window_total_matches_fraction() {
        let inst = gen_instance(&SyntheticParams::default(), 3).unwrap();
        let total: u64 = inst.windows.iter().map(Interval::len).sum();
        assert_eq!(total, 200);
        assert!(inst.windows.iter().all(|w| inst.scenes.contains(w)));
        assert_eq!(inst.scenes.len(), 20);
        assert_eq!(inst.scenes.last().unwrap().end, 1999);
    }

    #[test]
    fn several_windows_split_evenly() {
        let p = SyntheticParams {
            windows: 3,
            ..SyntheticParams::default()
        };
        let inst = gen_instance(&p, 4).unwrap();
        let lens: Vec<u64> = inst.windows.iter().map(Interval::len).collect();
        assert_eq!(lens, vec![67, 67, 66]);
    }

    #[test]
    fn rejects_bad_params() {
        let p = SyntheticParams {
            dim: 1,
            ..SyntheticParams::default()
        };
        assert!(matches!(gen_instance(&p, 0), Err(SyntheticError::BadParams(_))));
        let p = SyntheticParams {
            jitter: 0.5,
            ..SyntheticParams::default()
        };
        assert!(gen_instance(&p, 0).is_err());
        let p = SyntheticParams {
            frames: 50,
            ..SyntheticParams::default()
        };
        assert!(gen_instance(&p, 0).is_err());
    }

    #[test]
    fn jitter_stays_below_threshold() {
        let p = SyntheticParams {
            frames: 400,
            scenes: 6,
            jitter: MAX_JITTER,
            ..SyntheticParams::default()
        };
        let inst = gen_instance(&p, 11).unwrap();
        let d = compute_distances(&inst.features).unwrap();
        for scene in &inst.scenes {
            for i in scene.start..scene.end {
                assert!(d.values[i as usize] < 0.1);
            }
        }
        let set = cafs(&inst.features, 0.1, BoundaryMode::Padded).unwrap();
        assert_eq!(set.len(), 6);
    }

    #[test]
    fn dig_hits_the_window() {
        let inst = gen_instance(&SyntheticParams::default(), 5).unwrap();
        let settings = EvalSettings {
            wlen: 0,
            ..EvalSettings::default()
        };
        let r = evaluate(EvalStrategy::Dig, &inst, 16, &settings).unwrap();
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.selected.len(), 16);
        assert_eq!(r.rframe_count, Some(20));
    }

    #[test]
    fn dig_recall_exact_until_budget_reaches_segment_start() {
        let settings = EvalSettings {
            wlen: 0,
            ..EvalSettings::default()
        };
        for seed in 0..10 {
            let inst = gen_instance(&SyntheticParams::default(), seed).unwrap();
            let window = inst.windows[0];
            // the segment opens on the preceding scene's last frame
            let leading = u64::from(window.start > 0);
            let span = window.len() + leading;
            let r = evaluate(EvalStrategy::Dig, &inst, span / 2, &settings).unwrap();
            assert_eq!(r.recall, 1.0);
            let r = evaluate(EvalStrategy::Dig, &inst, span, &settings).unwrap();
            let want = if leading == 1 { 1.0 - 1.0 / span as f64 } else { 1.0 };
            assert!((r.recall - want).abs() < 1e-12, "seed {seed}: {}", r.recall);
        }
    }

    #[test]
    fn degenerate_rewards_take_fallback() {
        let p = SyntheticParams {
            reward_hi: 50.0,
            reward_lo: 50.0,
            ..SyntheticParams::default()
        };
        let inst = gen_instance(&p, 5).unwrap();
        let r = evaluate(EvalStrategy::Dig, &inst, 16, &EvalSettings::default()).unwrap();
        assert!(r.fallback_used);
        assert!((0.0..=1.0).contains(&r.recall));
    }

    #[test]
    fn uni_recall_tracks_window_fraction() {
        let inst = gen_instance(&SyntheticParams::default(), 8).unwrap();
        let r = evaluate(EvalStrategy::Uni, &inst, 400, &EvalSettings::default()).unwrap();
        assert!((r.recall - 0.1).abs() <= 0.05, "{}", r.recall);
    }

    #[test]
    fn fps_returns_about_budget_frames() {
        let inst = gen_instance(&SyntheticParams::default(), 8).unwrap();
        let r = evaluate(EvalStrategy::Fps, &inst, 16, &EvalSettings::default()).unwrap();
        assert!((15..=17).contains(&r.selected.len()), "{}", r.selected.len());
    }

    #[test]
    fn compare_rows_and_determinism() {
        let grid = CompareGrid {
            base: SyntheticParams {
                frames: 400,
                scenes: 8,
                ..SyntheticParams::default()
            },
            strategies: vec![EvalStrategy::Uni, EvalStrategy::CafsTopk, EvalStrategy::Dig],
            budgets: vec![8, 16],
            rhos: vec![0.1],
            sigmas: vec![0.0],
            settings: EvalSettings::default(),
        };
        let seeds = seed_range(0, 5);
        let rows = compare(&grid, &seeds).unwrap();
        assert_eq!(rows.len(), 6);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&rows, &mut a).unwrap();
        write_csv(&compare(&grid, &seeds).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let header = String::from_utf8(a).unwrap();
        assert!(header.starts_with(
            "strategy,budget,rho,sigma,recall_mean,recall_std,glc_mean,loc_mean\nuni,8,"
        ));
    }

    #[test]
    fn ladder_counts_follow_scenes() {
        let rows = rframe_ladder(&[5, 10], &[500, 1000], &seed_range(0, 3)).unwrap();
        for row in &rows {
            assert_eq!(row.rframe_mean, row.scenes as f64);
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in EvalStrategy::ALL {
            assert_eq!(s.name().parse::<EvalStrategy>().unwrap(), s);
        }
        assert!("topk".parse::<EvalStrategy>().is_err());
    }
}
