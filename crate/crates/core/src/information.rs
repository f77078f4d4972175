//! Mutual information over the Gaussian test channel, in bits.
//!
//! Two independent routes are provided: the entropy difference
//! `h(Y) − h(N)` from the evidence density, and `(log₂e/2)·∫₀^{kγ} mmse(t) dt`.
//! They share the posterior kernel but nothing else, so a disagreement
//! isolates quadrature error.

use std::f64::consts::LOG2_E;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{self, mmse_at_snr, simulate, ChannelKernel, ChannelPoint};
use crate::numerics::{
    integrate, try_derivative, ExtrapolationStatus, McMean, QuadOptions, Support, DEFAULT_CONFIDENCE,
};
use crate::source::{SideInfoModel, SourceModel};

/// Largest `γσ²` accepted by the low-SNR series.
pub const SERIES_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MiMethod {
    EntropyDiff,
    ImmseIntegral,
    Series,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiEstimate {
    pub gamma: f64,
    pub k: u32,
    pub bits: f64,
    pub method: MiMethod,
    pub error_bound: f64,
}

fn zero(point: ChannelPoint, method: MiMethod) -> MiEstimate {
    MiEstimate {
        gamma: point.gamma,
        k: point.k,
        bits: 0.0,
        method,
        error_bound: 0.0,
    }
}

/// `I(X; √γ·X + N)` for `k` looks, by `method` (entropy difference or the
/// integral of the MMSE).
pub fn mutual_info(source: &SourceModel, point: ChannelPoint, method: MiMethod) -> Result<MiEstimate> {
    let s = point.snr();
    if s == 0.0 {
        return Ok(zero(point, method));
    }
    match method {
        MiMethod::EntropyDiff => {
            let q = ChannelKernel::new(source, s)?.mutual_info_nats()?;
            Ok(MiEstimate {
                bits: q.value * LOG2_E,
                error_bound: q.abs_error_estimate * LOG2_E,
                ..zero(point, method)
            })
        }
        MiMethod::ImmseIntegral => {
            let var = source.variance();
            // the integrand changes fastest at the origin
            let support = Support::new(0.0, s).with_breakpoints((1..=8).map(|j| s * 0.25f64.powi(j)));
            let opts = QuadOptions {
                abs_tol: 1e-14 * s * var,
                rel_tol: 1e-11,
                max_evaluations: 20_000,
            };
            let inner_error = std::cell::Cell::new(0.0f64);
            let failure = std::cell::RefCell::new(None);
            let q = integrate(
                |t| match mmse_at_snr(source, t) {
                    Ok(e) => {
                        inner_error.set(inner_error.get().max(e.error_bound));
                        e.value
                    }
                    Err(err) => {
                        failure.borrow_mut().get_or_insert(err);
                        f64::NAN
                    }
                },
                &support,
                &opts,
            );
            if let Some(err) = failure.into_inner() {
                return Err(err);
            }
            let q = q?;
            Ok(MiEstimate {
                bits: 0.5 * LOG2_E * q.value,
                error_bound: 0.5 * LOG2_E * (q.abs_error_estimate + s * inner_error.get()),
                ..zero(point, method)
            })
        }
        MiMethod::Series => {
            if point.k != 1 {
                return mutual_info_series(source, s).map(|e| MiEstimate {
                    gamma: point.gamma,
                    k: point.k,
                    ..e
                });
            }
            mutual_info_series(source, point.gamma)
        }
        MiMethod::MonteCarlo => Err(Error::Unsupported(
            "Monte Carlo mutual information needs a sample size; use mc_mutual_info".into(),
        )),
    }
}

/// Entropy-difference MI in bits.
pub fn mutual_info_bits(source: &SourceModel, point: ChannelPoint) -> Result<f64> {
    mutual_info(source, point, MiMethod::EntropyDiff).map(|e| e.bits)
}

/// Entropy-difference MI, cross-checked against the MMSE integral; the two
/// must agree within their combined error bounds.
pub fn mutual_info_checked(source: &SourceModel, point: ChannelPoint) -> Result<MiEstimate> {
    let a = mutual_info(source, point, MiMethod::EntropyDiff)?;
    let b = mutual_info(source, point, MiMethod::ImmseIntegral)?;
    let allowed = a.error_bound + b.error_bound + 1e-9 * a.bits.abs() + 1e-13;
    if (a.bits - b.bits).abs() > allowed {
        return Err(Error::Inconsistent {
            first: a.bits,
            second: b.bits,
            allowed,
        });
    }
    Ok(MiEstimate {
        error_bound: a.error_bound.max((a.bits - b.bits).abs()),
        ..a
    })
}

/// Standardized moments and the bit-valued coefficients `c₁..c₄` of
/// `I = Σ cᵢ·(γσ²)ⁱ + O((γσ²)⁵)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesCoefficients {
    pub variance: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub c: [f64; 4],
}

impl SeriesCoefficients {
    pub fn of(source: &SourceModel) -> Result<Self> {
        let (mu3, mu4) = source.standardized_moments()?;
        let k = mu4 * mu4 - 6.0 * mu4 - 2.0 * mu3 * mu3 + 15.0;
        Ok(Self {
            variance: source.variance(),
            mu3,
            mu4,
            c: [0.5 * LOG2_E, -0.25 * LOG2_E, LOG2_E / 6.0, -k / 48.0 * LOG2_E],
        })
    }

    /// `(EX⁴)² − 6EX⁴ − 2(EX³)² + 15` in standardized form.
    pub fn kurtosis_term(&self) -> f64 {
        -48.0 * self.c[3] / LOG2_E
    }

    fn effective(&self, gamma: f64) -> Result<f64> {
        if !(gamma >= 0.0) {
            return Err(Error::Domain(format!("γ = {gamma} must be nonnegative")));
        }
        let s = gamma * self.variance;
        if s > SERIES_LIMIT {
            return Err(Error::Domain(format!(
                "series valid for γσ² ≤ {SERIES_LIMIT}, got {s}"
            )));
        }
        Ok(s)
    }

    pub fn mutual_info(&self, gamma: f64) -> Result<f64> {
        let s = self.effective(gamma)?;
        Ok(s * (self.c[0] + s * (self.c[1] + s * (self.c[2] + s * self.c[3]))))
    }

    /// `(2/log₂e)·dI/dγ` of the series: `σ²[1 − s + s² − (K/6)s³]`.
    pub fn mmse(&self, gamma: f64) -> Result<f64> {
        let s = self.effective(gamma)?;
        let k = self.kurtosis_term();
        Ok(self.variance * (1.0 + s * (-1.0 + s * (1.0 - s * k / 6.0))))
    }
}

/// Low-SNR expansion of the MI to fourth order in `γσ²`.
pub fn mutual_info_series(source: &SourceModel, gamma: f64) -> Result<MiEstimate> {
    let coeffs = SeriesCoefficients::of(source)?;
    let bits = coeffs.mutual_info(gamma)?;
    let s = gamma * coeffs.variance;
    Ok(MiEstimate {
        gamma,
        k: 1,
        bits,
        method: MiMethod::Series,
        error_bound: coeffs.c[3].abs() * s.powi(5),
    })
}

/// MMSE series obtained by differentiating the MI series.
pub fn mmse_series(source: &SourceModel, gamma: f64) -> Result<f64> {
    SeriesCoefficients::of(source)?.mmse(gamma)
}

/// The MMSE expansion in its printed form
/// `σ² − γσ⁴ + γ²σ⁴ + γ³σ⁶/6`, kept for side-by-side reporting only; beyond
/// first order it disagrees with [`mmse_series`].
pub fn mmse_series_literal(source: &SourceModel, gamma: f64) -> Result<f64> {
    let coeffs = SeriesCoefficients::of(source)?;
    coeffs.effective(gamma)?;
    let v = coeffs.variance;
    Ok(v - gamma * v * v + gamma * gamma * v * v + gamma.powi(3) * v.powi(3) / 6.0)
}

/// `I(X; Y | Z) = Σⱼ qⱼ·I(X|Z=zⱼ; Y)`.
pub fn conditional_mutual_info(model: &SideInfoModel, point: ChannelPoint) -> Result<MiEstimate> {
    if point.snr() == 0.0 {
        return Ok(zero(point, MiMethod::EntropyDiff));
    }
    let parts = model
        .slices()
        .par_iter()
        .map(|s| mutual_info(&s.conditional, point, MiMethod::EntropyDiff).map(|e| (s.prob, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MiEstimate {
        bits: parts.iter().map(|(q, e)| q * e.bits).sum(),
        error_bound: parts.iter().map(|(q, e)| q * e.error_bound).sum(),
        ..zero(point, MiMethod::EntropyDiff)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImmsePoint {
    pub gamma: f64,
    /// Richardson derivative of the entropy-difference MI, bits per unit γ.
    pub derivative: f64,
    /// `(log₂e/2)·mmse(γ)`.
    pub expected: f64,
    pub relative_deviation: f64,
    pub residual: f64,
    pub status: ExtrapolationStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImmseReport {
    pub source: String,
    pub points: Vec<ImmsePoint>,
    pub max_relative_deviation: f64,
}

/// Compares `dI/dγ` (finite differences of the entropy-difference MI) with
/// `(log₂e/2)·mmse(γ)` at every grid point.
pub fn verify_immse(source: &SourceModel, grid: &[f64]) -> Result<ImmseReport> {
    if let Some(g) = grid.iter().find(|g| !(**g > 0.0 && **g <= 5.0)) {
        return Err(Error::Domain(format!("I-MMSE grid points must lie in (0, 5], got {g}")));
    }
    let points = grid
        .par_iter()
        .map(|&gamma| {
            let h0 = 0.25 * gamma.min(1.0);
            let steps: Vec<f64> = (0..5).map(|i| h0 * 0.5f64.powi(i)).collect();
            let d = try_derivative(|g| mutual_info_bits(source, ChannelPoint { gamma: g, k: 1 }), gamma, &steps)?;
            let expected = 0.5 * LOG2_E * estimation::mmse_at_snr(source, gamma)?.value;
            Ok(ImmsePoint {
                gamma,
                derivative: d.value,
                expected,
                relative_deviation: (d.value - expected).abs() / expected,
                residual: d.residual,
                status: d.status,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_relative_deviation = points.iter().map(|p| p.relative_deviation).fold(0.0, f64::max);
    Ok(ImmseReport {
        source: source.describe(),
        points,
        max_relative_deviation,
    })
}

/// Monte Carlo MI in bits from `k` separate observations per draw: the mean
/// of `log p(y|x) − log p(y)`, with the evidence of the whole observation
/// vector integrated directly over the prior. Test oracle; `k ≤ 8`.
pub fn mc_mutual_info(source: &SourceModel, point: ChannelPoint, n: usize, seed: u64) -> Result<McMean> {
    let gamma = point.gamma;
    let est = simulate(source, gamma, point.k, n, seed, DEFAULT_CONFIDENCE, |x, ys, log_evidence, _| {
        estimation::log_likelihood(gamma, x, ys) - log_evidence
    })?;
    Ok(McMean {
        mean: est.mean * LOG2_E,
        half_width: est.half_width * LOG2_E,
        ..est
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{default_gamma_grid, geometric_grid, limit_at_zero};
    use crate::source::{MixtureSpec, DEFAULT_SLICES};

    fn mixture() -> SourceModel {
        MixtureSpec::new(0.5, 1.0, 5.0).unwrap().source()
    }

    fn pt(gamma: f64, k: u32) -> ChannelPoint {
        ChannelPoint::new(gamma, k).unwrap()
    }

    #[test]
    fn gaussian_capacity() {
        let g = SourceModel::gaussian(0.0, 1.0).unwrap();
        for method in [MiMethod::EntropyDiff, MiMethod::ImmseIntegral] {
            let e = mutual_info(&g, pt(1.0, 1), method).unwrap();
            assert!((e.bits - 0.5).abs() < 1e-7, "{e:?}");
            let e2 = mutual_info(&g, pt(0.5, 2), method).unwrap();
            assert!((e2.bits - 0.5).abs() < 1e-7, "{e2:?}");
        }
    }

    #[test]
    fn two_routes_agree_on_the_mixture() {
        let m = mixture();
        let a = mutual_info(&m, pt(0.25, 1), MiMethod::EntropyDiff).unwrap();
        let b = mutual_info(&m, pt(0.25, 1), MiMethod::ImmseIntegral).unwrap();
        assert!((a.bits - b.bits).abs() < 1e-5, "{a:?} {b:?}");
        mutual_info_checked(&m, pt(0.25, 1)).unwrap();
        mutual_info_checked(&SourceModel::two_point(1.0).unwrap(), pt(2.0, 1)).unwrap();
        mutual_info_checked(&SourceModel::uniform_with_variance(1.0).unwrap(), pt(1.5, 1)).unwrap();
    }

    #[test]
    fn zero_snr_gives_zero_bits() {
        for method in [MiMethod::EntropyDiff, MiMethod::ImmseIntegral, MiMethod::Series] {
            assert_eq!(mutual_info(&mixture(), pt(0.0, 4), method).unwrap().bits, 0.0);
        }
        assert_eq!(mutual_info_series(&mixture(), 0.0).unwrap().bits, 0.0);
        assert_eq!(mmse_series(&mixture(), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn series_matches_log_for_gaussian() {
        let g = SourceModel::gaussian(0.0, 1.0).unwrap();
        let e = mutual_info_series(&g, 0.01).unwrap();
        assert!((e.bits - 0.5 * 1.01f64.log2()).abs() < 1e-9);
        let c = SeriesCoefficients::of(&g).unwrap();
        let want = [0.5, -0.25, 1.0 / 6.0, -0.125];
        for (ci, wi) in c.c.iter().zip(want) {
            assert!((ci - wi * LOG2_E).abs() < 1e-15);
        }
    }

    #[test]
    fn two_point_fourth_coefficient() {
        let c = SeriesCoefficients::of(&SourceModel::two_point(1.0).unwrap()).unwrap();
        assert!((c.c[3] + 10.0 / 48.0 * LOG2_E).abs() < 1e-15);
    }

    #[test]
    fn series_guard_and_refusals() {
        let g = SourceModel::gaussian(0.0, 2.0).unwrap();
        assert!(mutual_info_series(&g, 0.06).is_err());
        let x: Vec<f64> = (0..=200).map(|i| -10.0 + i as f64 * 0.1).collect();
        let f: Vec<f64> = x.iter().map(|x: &f64| (1.0 + x.abs()).powf(-4.5)).collect();
        let heavy = SourceModel::tabulated(x, f, Some(4.5)).unwrap();
        assert!(matches!(mutual_info_series(&heavy, 0.01), Err(Error::DivergentMoment { .. })));
    }

    #[test]
    fn mmse_series_against_closed_form_and_quadrature() {
        let g = SourceModel::gaussian(0.0, 1.0).unwrap();
        let s: f64 = 0.05;
        // truncation after s³ leaves the s⁴ term of 1/(1+s)
        let diff = mmse_series(&g, s).unwrap() - 1.0 / (1.0 + s);
        assert!((diff + s.powi(4)).abs() < 2.0 * s.powi(5), "{diff}");
        let m = mixture();
        let q = estimation::mmse(&m, pt(0.02, 1)).unwrap();
        let series = mmse_series(&m, 0.02).unwrap();
        assert!((series - q).abs() < 1e-4 * q, "{series} vs {q}");
        // the printed form agrees to first order only
        let lit = mmse_series_literal(&g, 1e-3).unwrap();
        assert!((lit - 1.0 / 1.001).abs() < 2e-6);
    }

    #[test]
    fn monotone_in_gamma_and_k() {
        let m = mixture();
        let grid = geometric_grid(1e-3, 4.0, 12);
        let mut last = 0.0;
        for &g in &grid {
            let v = mutual_info_bits(&m, pt(g, 1)).unwrap();
            assert!(v > last);
            last = v;
        }
        let mut last = 0.0;
        for k in 1..=6 {
            let v = mutual_info_bits(&m, pt(0.3, k)).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn conditional_limit_jointly_gaussian() {
        let model = SideInfoModel::jointly_gaussian(0.0, 1.0, 0.8, DEFAULT_SLICES).unwrap();
        let lim = limit_at_zero(
            |g| conditional_mutual_info(&model, pt(g, 1)).unwrap().bits / g,
            &default_gamma_grid(),
        );
        let want = 0.36 * LOG2_E / 2.0;
        assert!((lim.value - want).abs() < 1e-6 * want, "{lim:?}");
        assert_eq!(conditional_mutual_info(&model, pt(0.0, 1)).unwrap().bits, 0.0);
    }

    #[test]
    fn immse_gaussian_and_two_point() {
        let r = verify_immse(&SourceModel::gaussian(0.0, 1.0).unwrap(), &[0.1, 0.5, 1.0, 2.0]).unwrap();
        assert!(r.max_relative_deviation < 1e-5, "{r:?}");
        let r = verify_immse(&SourceModel::two_point(1.0).unwrap(), &[1.0]).unwrap();
        assert!(r.max_relative_deviation < 1e-3, "{r:?}");
        assert!(verify_immse(&mixture(), &[6.0]).is_err());
    }

    #[test]
    fn monte_carlo_mi_covers_reduced_quadrature() {
        let src = SourceModel::two_point(1.0).unwrap();
        let est = mc_mutual_info(&src, pt(0.4, 3), 100_000, 11).unwrap();
        let q = mutual_info_bits(&src, pt(0.4, 3)).unwrap();
        assert!(est.covers(q), "{est:?} vs {q}");
    }
}
