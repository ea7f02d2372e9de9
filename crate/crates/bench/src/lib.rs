//! Seeded inputs for the criterion benchmarks.

use framesieve::cafs::DistanceSequence;
use framesieve::synthetic::{gen_instance, SyntheticParams};
use framesieve::{FeatureSequence, RewardVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Noisy distances with a tall spike every `period` entries.
pub fn spiky_distances(len: usize, period: usize, seed: u64) -> DistanceSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..len)
        .map(|i| {
            let noise = rng.random_range(0.0..0.08);
            if i % period == period / 2 {
                0.9 + noise
            } else {
                noise
            }
        })
        .collect();
    DistanceSequence { values }
}

pub fn random_rewards(len: usize, seed: u64) -> RewardVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..len).map(|_| rng.random_range(0.0..=100.0)).collect();
    RewardVector::new(values, "bench").expect("values drawn in range")
}

/// A jittered synthetic video of `frames` frames and `scenes` scenes.
pub fn video(frames: usize, scenes: usize, dim: usize, seed: u64) -> FeatureSequence {
    let params = SyntheticParams {
        frames,
        scenes,
        dim,
        jitter: 0.05,
        ..SyntheticParams::default()
    };
    gen_instance(&params, seed)
        .expect("benchmark parameters are valid")
        .features
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spikes_become_peaks() {
        let d = spiky_distances(1000, 50, 1);
        assert_eq!(framesieve::detect_peaks(&d, 0.1).len(), 20);
    }

    #[test]
    fn video_has_requested_shape() {
        let v = video(500, 10, 16, 2);
        assert_eq!((v.len(), v.dim()), (500, 16));
        assert_eq!(random_rewards(7, 0).len(), 7);
    }
}
