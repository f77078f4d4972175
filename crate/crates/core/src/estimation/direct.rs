//! Brute-force posterior from `k` separate observations, without reducing
//! them to a sufficient statistic. Used only as a Monte Carlo oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::quadrature::ENVELOPE_STDS;
use crate::numerics::{derive_seed, integrate, mc_mean, McMean, QuadOptions, Support};
use crate::source::SourceModel;

/// Largest observation vector the oracle accepts.
pub const MAX_DIRECT_OBSERVATIONS: u32 = 8;
const CHUNK: usize = 2048;
const COARSE_GRID: usize = 65;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln p(y₁..y_k)` and `E[X | y₁..y_k]` by direct integration over the prior.
pub(crate) struct DirectPosterior<'a> {
    source: &'a SourceModel,
    root: f64,
    window: Option<Support>,
}

impl<'a> DirectPosterior<'a> {
    pub(crate) fn new(source: &'a SourceModel, gamma: f64) -> Self {
        let window = if source.is_continuous() {
            let (lo, hi) = source.effective_support(ENVELOPE_STDS);
            let mut w = Support::new(lo, hi);
            if let Some(cs) = source.components() {
                w = w.with_breakpoints(cs.iter().map(|c| c.mean));
            }
            Some(w)
        } else {
            None
        };
        Self {
            source,
            root: gamma.sqrt(),
            window,
        }
    }

    fn log_likelihood(&self, ys: &[f64], x: f64) -> f64 {
        ys.iter()
            .map(|y| {
                let d = y - self.root * x;
                -0.5 * d * d - LN_SQRT_2PI
            })
            .sum()
    }

    pub(crate) fn evaluate(&self, ys: &[f64]) -> Result<(f64, f64)> {
        match (&self.window, self.source.atoms()) {
            (None, Some(atoms)) => {
                let logs: Vec<f64> = atoms.iter().map(|a| a.p.ln() + self.log_likelihood(ys, a.x)).collect();
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (mut s0, mut s1) = (0.0, 0.0);
                for (a, l) in atoms.iter().zip(&logs) {
                    let w = (l - max).exp();
                    s0 += w;
                    s1 += w * a.x;
                }
                Ok((max + s0.ln(), s1 / s0))
            }
            (Some(window), _) => {
                let log_f = |x: f64| -> f64 {
                    let d = self.source.density(x).unwrap_or(0.0);
                    if d > 0.0 {
                        d.ln() + self.log_likelihood(ys, x)
                    } else {
                        f64::NEG_INFINITY
                    }
                };
                // crude location of the integrand peak for the max-shift
                let k = ys.len() as f64;
                let guess = if self.root > 0.0 {
                    (ys.iter().sum::<f64>() / (k * self.root)).clamp(window.lo, window.hi)
                } else {
                    0.0
                };
                let step = (window.hi - window.lo) / (COARSE_GRID - 1) as f64;
                let shift = (0..COARSE_GRID)
                    .map(|i| window.lo + step * i as f64)
                    .chain(std::iter::once(guess))
                    .map(log_f)
                    .fold(f64::NEG_INFINITY, f64::max);
                let support = window.clone().with_breakpoints([guess]);
                let opts = QuadOptions::absolute(0.0).with_rel_tol(1e-10);
                let i0 = integrate(|x| (log_f(x) - shift).exp(), &support, &opts)?;
                let i1 = integrate(|x| x * (log_f(x) - shift).exp(), &support, &opts)?;
                Ok((shift + i0.value.ln(), i1.value / i0.value))
            }
            _ => unreachable!("continuous sources get a window, discrete ones have atoms"),
        }
    }
}

pub(crate) fn check_k(k: u32) -> Result<()> {
    if k == 0 || k > MAX_DIRECT_OBSERVATIONS {
        return Err(Error::Domain(format!(
            "direct k-observation oracle supports 1 ≤ k ≤ {MAX_DIRECT_OBSERVATIONS}, got {k}"
        )));
    }
    Ok(())
}

/// Per-draw statistic from `(x, y₁..y_k, ln p(y), E[X|y])`, averaged over
/// `n` seeded draws with a confidence interval.
pub(crate) fn simulate<F>(source: &SourceModel, gamma: f64, k: u32, n: usize, seed: u64, confidence: f64, stat: F) -> Result<McMean>
where
    F: Fn(f64, &[f64], f64, f64) -> f64 + Sync,
{
    check_k(k)?;
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("γ = {gamma} must be nonnegative")));
    }
    let post = DirectPosterior::new(source, gamma);
    let root = gamma.sqrt();
    let chunks = n.div_ceil(CHUNK);
    let values: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64));
            let len = CHUNK.min(n - c * CHUNK);
            let mut out = Vec::with_capacity(len);
            let mut ys = vec![0.0; k as usize];
            for _ in 0..len {
                let x = source.sample_one(&mut rng);
                for y in ys.iter_mut() {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    *y = root * x + noise;
                }
                let (log_evidence, mean) = post.evaluate(&ys)?;
                out.push(stat(x, &ys, log_evidence, mean));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let flat: Vec<f64> = values.into_iter().flatten().collect();
    mc_mean(&flat, confidence)
}

/// `ln Π φ(yᵢ − √γ·x)`.
pub(crate) fn log_likelihood(gamma: f64, x: f64, ys: &[f64]) -> f64 {
    let root = gamma.sqrt();
    ys.iter()
        .map(|y| {
            let d = y - root * x;
            -0.5 * d * d - LN_SQRT_2PI
        })
        .sum()
}
