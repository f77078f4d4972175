//! Conditional-mean estimation over the Gaussian test channel
//! `Y = √γ·X + N`.
//!
//! `k` independent looks at `X` are reduced to one look at SNR `k·γ`; all
//! quantities for a [`ChannelPoint`] go through [`ChannelKernel`] at that
//! effective SNR, so `(γ, k)` and `(k·γ, 1)` share one code path.

mod direct;
mod kernel;

use serde::Serialize;

pub use direct::MAX_DIRECT_OBSERVATIONS;
pub use kernel::{ChannelKernel, Posterior};

pub(crate) use direct::{log_likelihood, simulate};

use crate::error::{Error, Result};
use crate::numerics::{try_limit_at_zero, LimitEstimate, McMean, DEFAULT_CONFIDENCE};
use crate::source::{SideInfoModel, SourceModel};

/// SNR scaling `γ` and number of independent descriptions `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelPoint {
    pub gamma: f64,
    pub k: u32,
}

impl ChannelPoint {
    pub fn new(gamma: f64, k: u32) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::Domain(format!("γ = {gamma} must be finite and nonnegative")));
        }
        if k == 0 {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        Ok(Self { gamma, k })
    }

    /// One look at SNR `γ`.
    pub fn single(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1)
    }

    /// Effective single-observation SNR `k·γ`.
    pub fn snr(&self) -> f64 {
        self.k as f64 * self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMethod {
    Quadrature,
    MonteCarlo,
}

/// MMSE with its linear benchmark and the Jensen-gap statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub mmse: f64,
    pub lmmse: f64,
    /// `E_Z[var(X|Z=z)²]`.
    pub jensen_lhs: f64,
    /// `var(X|Z)²`.
    pub jensen_rhs: f64,
    pub gap: f64,
    pub method: EstimationMethod,
    /// Quadrature error bound, or the CI half-width for Monte Carlo.
    pub error_bound: f64,
}

/// A value with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error_bound: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("γ = {gamma} must be finite and nonnegative")))
    }
}

/// `E[X | √γ·X + N = y]`.
pub fn posterior_mean(source: &SourceModel, gamma: f64, y: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if gamma == 0.0 {
        return Ok(source.mean());
    }
    let kernel = ChannelKernel::new(source, gamma)?;
    let mu = kernel.offset();
    Ok(mu + kernel.posterior(y - gamma.sqrt() * mu).mean)
}

/// `E[(X − E[X|Y])²]` at effective SNR `snr`, with its quadrature error.
pub fn mmse_at_snr(source: &SourceModel, snr: f64) -> Result<Estimate> {
    check_gamma(snr)?;
    if snr == 0.0 {
        return Ok(Estimate {
            value: source.variance(),
            error_bound: 0.0,
        });
    }
    let q = ChannelKernel::new(source, snr)?.mmse()?;
    Ok(Estimate {
        value: q.value,
        error_bound: q.abs_error_estimate,
    })
}

pub fn mmse_with_error(source: &SourceModel, point: ChannelPoint) -> Result<Estimate> {
    mmse_at_snr(source, point.snr())
}

/// MMSE at `point`; for `k > 1` this is the MMSE at SNR `k·γ`.
pub fn mmse(source: &SourceModel, point: ChannelPoint) -> Result<f64> {
    mmse_with_error(source, point).map(|e| e.value)
}

/// `Var(X) − mmse = E[E[X|Y]²] − (E X)²`, evaluated directly so that it
/// keeps full relative precision as `γ → 0`.
pub fn explained_variance(source: &SourceModel, point: ChannelPoint) -> Result<Estimate> {
    let snr = point.snr();
    check_gamma(snr)?;
    if snr == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    let q = ChannelKernel::new(source, snr)?.explained_variance()?;
    Ok(Estimate {
        value: q.value,
        error_bound: q.abs_error_estimate,
    })
}

/// Best linear estimator error `σ²/(1 + k·γ·σ²)`.
pub fn lmmse(source: &SourceModel, point: ChannelPoint) -> f64 {
    lmmse_of_variance(source.variance(), point)
}

pub fn lmmse_of_variance(var: f64, point: ChannelPoint) -> f64 {
    var / (1.0 + point.snr() * var)
}

/// `var(X | Y, Z) = Σⱼ qⱼ·mmse(X | Z = zⱼ)` together with the Jensen terms.
pub fn conditional_mmse(model: &SideInfoModel, point: ChannelPoint) -> Result<EstimatorReport> {
    let mut mmse = 0.0;
    let mut lmmse = 0.0;
    let mut error_bound = 0.0;
    for slice in model.slices() {
        let e = mmse_with_error(&slice.conditional, point)?;
        mmse += slice.prob * e.value;
        error_bound += slice.prob * e.error_bound;
        lmmse += slice.prob * lmmse_of_variance(slice.conditional.variance(), point);
    }
    let (jensen_lhs, jensen_rhs) = model.jensen_terms();
    Ok(EstimatorReport {
        mmse,
        lmmse,
        jensen_lhs,
        jensen_rhs,
        gap: jensen_lhs - jensen_rhs,
        method: EstimationMethod::Quadrature,
        error_bound,
    })
}

/// Relative Jensen gap below which the low-SNR estimator counts as linear.
pub const LINEARITY_TOL: f64 = 1e-9;

/// Outcome of the linearity test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearityVerdict {
    pub linear: bool,
    pub report: EstimatorReport,
}

/// The low-SNR conditional-mean estimator given `Z` is linear iff
/// `E_Z[var(X|Z=z)²] = var(X|Z)²`; tested as `gap ≤ 1e-9·rhs`.
pub fn linearity_test(model: &SideInfoModel) -> Result<LinearityVerdict> {
    let report = conditional_mmse(model, ChannelPoint { gamma: 0.0, k: 1 })?;
    Ok(LinearityVerdict {
        linear: report.gap <= LINEARITY_TOL * report.jensen_rhs,
        report,
    })
}

/// Numeric first-order coefficient of the conditional MMSE:
/// `lim (var(X|Z) − var(X|Y,Z))/γ`, which equals `E_Z[var(X|Z=z)²]`.
/// Subtracting `var(X|Z)²` gives the Jensen gap without using the formula.
pub fn low_snr_slope(model: &SideInfoModel, grid: &[f64]) -> Result<LimitEstimate> {
    try_limit_at_zero(
        |g| {
            let mut total = 0.0;
            for slice in model.slices() {
                total += slice.prob * explained_variance(&slice.conditional, ChannelPoint { gamma: g, k: 1 })?.value;
            }
            Ok(total / g)
        },
        grid,
    )
}

/// Monte Carlo MMSE from `k` separate observations per draw, each
/// posterior computed by direct integration over the prior (no reduction to
/// a sufficient statistic). Test oracle; `k ≤ 8`.
pub fn mc_mmse(source: &SourceModel, point: ChannelPoint, n: usize, seed: u64) -> Result<McMean> {
    simulate(source, point.gamma, point.k, n, seed, DEFAULT_CONFIDENCE, |x, _, _, mean| {
        (x - mean).powi(2)
    })
}
