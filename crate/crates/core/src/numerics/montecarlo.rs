use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLES: usize = 1_000_000;
/// Default two-sided confidence level.
pub const DEFAULT_CONFIDENCE: f64 = 0.99;
/// Smallest sample accepted by [`mc_mean`].
pub const MIN_SAMPLES: usize = 30;

/// Sample mean with a normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McMean {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
    pub confidence: f64,
}

impl McMean {
    pub fn covers(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.half_width
    }
}

/// Two-sided standard normal quantile for `confidence`.
pub fn z_quantile(confidence: f64) -> f64 {
    let n = Normal::standard();
    n.inverse_cdf(0.5 + 0.5 * confidence)
}

/// Mean and confidence half-width of `samples`.
pub fn mc_mean(samples: &[f64], confidence: f64) -> Result<McMean> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "Monte Carlo mean needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Domain(format!("confidence {confidence} outside (0, 1)")));
    }
    let n = samples.len() as f64;
    // two-pass for stability
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McMean {
        mean,
        half_width: z_quantile(confidence) * (var / n).sqrt(),
        n: samples.len(),
        confidence,
    })
}

/// Independent per-task seed derived from a root seed (SplitMix64 step).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use rayon::prelude::*;

    #[test]
    fn constant_sequence_has_zero_width() {
        let m = mc_mean(&[2.5; 100], 0.99).unwrap();
        assert_eq!(m.mean, 2.5);
        assert_eq!(m.half_width, 0.0);
    }

    #[test]
    fn bernoulli_half_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s: Vec<f64> = (0..10_000).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
        let m = mc_mean(&s, 0.99).unwrap();
        // 2.576 * sqrt(0.25 / 1e4)
        assert!((m.half_width - 2.575829 * 0.005).abs() < 2e-5, "{m:?}");
    }

    #[test]
    fn short_input_is_rejected() {
        assert!(mc_mean(&[1.0; 10], 0.99).is_err());
    }

    #[test]
    fn normal_mean_coverage() {
        let seeds = 100u64;
        let covered = (0..seeds)
            .into_par_iter()
            .filter(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(42, s));
                let xs: Vec<f64> = (0..DEFAULT_SAMPLES).map(|_| rng.sample(StandardNormal)).collect();
                mc_mean(&xs, 0.99).unwrap().covers(0.0)
            })
            .count();
        assert!(covered as f64 >= 0.95 * seeds as f64, "coverage {covered}/{seeds}");
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..100).map(|i| derive_seed(1, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(a.len(), b.len());
    }
}
