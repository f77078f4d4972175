//! Additive rate-distortion function: the rate of the Gaussian test channel
//! followed by conditional-mean estimation, traced parametrically in the SNR.

pub mod ba;

use std::f64::consts::LOG2_E;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{explained_variance, mmse_at_snr, ChannelPoint};
use crate::information::mutual_info;
use crate::information::MiMethod;
use crate::numerics::roots::solve_monotone_with;
use crate::numerics::{default_gamma_grid, geometric_grid, limit_from_samples, try_limit_at_zero, LimitEstimate};
use crate::source::{MixtureSpec, SourceModel};

pub use ba::{blahut_arimoto, BaOptions, BaOracle, BaPoint};

/// Default relative tolerance of the distortion match in [`ardf_at`].
pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_GRID_POINTS: usize = 60;
pub const DEFAULT_DMIN_FRACTION: f64 = 0.01;
pub const DEFAULT_DMAX_FRACTION: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Ardf,
    GaussianRdf,
    ConditionalMixtureRdf,
    BaOracle,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ardf => "ardf",
            Self::GaussianRdf => "gaussian_rdf",
            Self::ConditionalMixtureRdf => "conditional_mixture_rdf",
            Self::BaOracle => "ba_oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdPoint {
    pub kind: CurveKind,
    /// SNR parameter of the test channel, where one exists.
    pub gamma: Option<f64>,
    pub distortion: f64,
    pub rate_bits: f64,
    pub err_bound: f64,
}

/// Points ordered by decreasing distortion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdCurve {
    pub kind: CurveKind,
    pub source: String,
    pub tolerance: f64,
    pub points: Vec<RdPoint>,
}

/// `points` distortions from `hi_frac·σ²` down to `lo_frac·σ²`, geometric.
pub fn distortion_grid(var: f64, lo_frac: f64, hi_frac: f64, points: usize) -> Result<Vec<f64>> {
    if !(var > 0.0 && 0.0 < lo_frac && lo_frac < hi_frac && hi_frac <= 1.0 && points >= 2) {
        return Err(Error::Domain(format!(
            "distortion grid needs 0 < dmin < dmax ≤ 1 (fractions of σ²) and ≥ 2 points, got [{lo_frac}, {hi_frac}] × {points}"
        )));
    }
    Ok(geometric_grid(hi_frac * var, lo_frac * var, points))
}

pub fn default_distortion_grid(var: f64) -> Vec<f64> {
    geometric_grid(DEFAULT_DMAX_FRACTION * var, DEFAULT_DMIN_FRACTION * var, DEFAULT_GRID_POINTS)
}

/// `½·log₂(σ²/D)`, zero above `σ²`.
pub fn gaussian_rdf(var: f64, d: f64) -> f64 {
    (0.5 * (var / d).log2()).max(0.0)
}

fn zero_rate(d: f64) -> RdPoint {
    RdPoint {
        kind: CurveKind::Ardf,
        gamma: Some(0.0),
        distortion: d,
        rate_bits: 0.0,
        err_bound: 0.0,
    }
}

/// ARDF point at distortion `d` with the default tolerance.
pub fn ardf_at(source: &SourceModel, d: f64) -> Result<RdPoint> {
    ardf_at_with(source, d, DEFAULT_TOL)
}

/// Solves `mmse(γ) = d` (to `tol·d`) and returns `I(γ)`.
///
/// Since `mmse ≤ lmmse`, the root lies in `[0, 1/d − 1/σ²]`.
pub fn ardf_at_with(source: &SourceModel, d: f64, tol: f64) -> Result<RdPoint> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain(format!("distortion must be positive, got {d}")));
    }
    let var = source.variance();
    if d >= var {
        return Ok(zero_rate(var));
    }
    let hi = 1.0 / d - 1.0 / var;
    let gamma = solve_monotone_with(|g| mmse_at_snr(source, g).map(|e| e.value), d, 0.0, hi, tol * d)?;
    let mi = mutual_info(source, ChannelPoint { gamma, k: 1 }, MiMethod::EntropyDiff)?;
    // rate error from the distortion mismatch: |dR/dD|·tol·d ≤ (log₂e/2)·γ·tol·d
    let slack = 0.5 * LOG2_E * gamma * tol * d;
    Ok(RdPoint {
        kind: CurveKind::Ardf,
        gamma: Some(gamma),
        distortion: d,
        rate_bits: mi.bits,
        err_bound: mi.error_bound + slack,
    })
}

/// ARDF at every distortion of `ds`, in parallel.
pub fn ardf_curve(source: &SourceModel, ds: &[f64], tol: f64) -> Result<RdCurve> {
    let mut points = ds
        .par_iter()
        .map(|&d| ardf_at_with(source, d, tol))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| b.distortion.total_cmp(&a.distortion));
    Ok(RdCurve {
        kind: CurveKind::Ardf,
        source: source.describe(),
        tolerance: tol,
        points,
    })
}

pub fn gaussian_rdf_curve(var: f64, ds: &[f64]) -> RdCurve {
    RdCurve {
        kind: CurveKind::GaussianRdf,
        source: format!("gaussian(var={var})"),
        tolerance: 0.0,
        points: ds
            .iter()
            .map(|&d| RdPoint {
                kind: CurveKind::GaussianRdf,
                gamma: (d < var).then(|| 1.0 / d - 1.0 / var),
                distortion: d,
                rate_bits: gaussian_rdf(var, d),
                err_bound: 0.0,
            })
            .collect(),
    }
}

/// BA oracle rates at the distortions `ds` (those below the swept range are
/// skipped).
pub fn ba_curve(oracle: &BaOracle, description: String, ds: &[f64]) -> RdCurve {
    RdCurve {
        kind: CurveKind::BaOracle,
        source: description,
        tolerance: oracle.max_gap_bits(),
        points: ds
            .iter()
            .filter_map(|&d| {
                oracle.rate_at(d).ok().map(|r| RdPoint {
                    kind: CurveKind::BaOracle,
                    gamma: None,
                    distortion: d,
                    rate_bits: r,
                    err_bound: oracle.max_gap_bits(),
                })
            })
            .collect(),
    }
}

/// Slope of the ARDF at `D_max` with the value it should approach.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub estimate: LimitEstimate,
    /// `−log₂e/(2σ²)`.
    pub expected: f64,
}

/// `dR/dD` at `D = σ²`, bits per unit distortion.
///
/// Along the parametric curve the secant slope from `(σ², 0)` is
/// `−I(γ)/(σ² − mmse(γ))`; numerator and denominator are both `O(γ)` and
/// both are evaluated directly, so the ratio keeps full precision down to
/// `γ = 1e-5` and is extrapolated to `γ = 0`.
pub fn ardf_slope_at_dmax(source: &SourceModel) -> Result<SlopeEstimate> {
    ardf_slope_at_dmax_with(source, &default_gamma_grid())
}

pub fn ardf_slope_at_dmax_with(source: &SourceModel, grid: &[f64]) -> Result<SlopeEstimate> {
    let values = grid
        .par_iter()
        .map(|&g| {
            let point = ChannelPoint { gamma: g, k: 1 };
            let rate = mutual_info(source, point, MiMethod::EntropyDiff)?.bits;
            let drop = explained_variance(source, point)?.value;
            Ok(-rate / drop)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SlopeEstimate {
        estimate: limit_from_samples(grid, &values),
        expected: -0.5 * LOG2_E / source.variance(),
    })
}

/// Conditional RDF of the two-component mixture given the component
/// indicator (reverse waterfilling over the components), bits.
pub fn mixture_conditional_rdf(spec: &MixtureSpec, d: f64) -> Result<f64> {
    let var = spec.total_var();
    if !(d > 0.0 && d <= var) {
        return Err(Error::Domain(format!("distortion {d} outside (0, {var}]")));
    }
    let (p0, p1, v0, v1) = (spec.p0(), spec.p1(), spec.var0(), spec.var1());
    if d <= v0 {
        Ok(0.5 * (p0 * (v0 / d).log2() + p1 * (v1 / d).log2()))
    } else {
        Ok((0.5 * p1 * (p1 * v1 / (d - p0 * v0)).log2()).max(0.0))
    }
}

pub fn conditional_rdf_curve(spec: &MixtureSpec, ds: &[f64]) -> Result<RdCurve> {
    Ok(RdCurve {
        kind: CurveKind::ConditionalMixtureRdf,
        source: spec.source().describe(),
        tolerance: 0.0,
        points: ds
            .iter()
            .map(|&d| {
                Ok(RdPoint {
                    kind: CurveKind::ConditionalMixtureRdf,
                    gamma: None,
                    distortion: d,
                    rate_bits: mixture_conditional_rdf(spec, d.min(spec.total_var()))?,
                    err_bound: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    })
}

/// Numeric slope of the conditional RDF at `D = σ²` from one-sided secants
/// `R(σ²(1−ε))/(−σ²ε)` extrapolated to `ε = 0`.
pub fn conditional_rdf_slope_at_dmax(spec: &MixtureSpec) -> Result<LimitEstimate> {
    let var = spec.total_var();
    try_limit_at_zero(|eps| Ok(mixture_conditional_rdf(spec, var * (1.0 - eps))? / (-var * eps)), &default_gamma_grid())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossRow {
    pub var1: f64,
    pub var0: f64,
    pub p1: f64,
    pub eps: f64,
    pub distortion: f64,
    pub rate_ardf: f64,
    pub rate_conditional: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossTable {
    pub lambda: f64,
    pub total_var: f64,
    pub rows: Vec<LossRow>,
    /// `(ε, ratio strictly increasing in σ₁²)`.
    pub monotone: Vec<(f64, bool)>,
}

/// Multiplicative loss `R_ardf(D)/R_{X|S}(D)` at `D = σ²(1−ε)` for every
/// `σ₁²` of the grid (taken in the given order) and every `ε`.
pub fn multiplicative_loss_sweep(var1s: &[f64], lambda: f64, total_var: f64, eps: &[f64], tol: f64) -> Result<LossTable> {
    if var1s.is_empty() || eps.is_empty() {
        return Err(Error::Domain("loss sweep needs at least one σ₁² and one ε".into()));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::Domain(format!("ε = {e} must lie in (0, 1)")));
    }
    let specs = var1s
        .iter()
        .map(|&v1| {
            let spec = MixtureSpec::new(lambda, total_var, v1)?;
            if spec.var0() < 0.5 * total_var {
                return Err(Error::Domain(format!(
                    "σ₁² = {v1} induces σ₀² = {} below σ²/2",
                    spec.var0()
                )));
            }
            Ok(spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(MixtureSpec, f64)> = specs.iter().flat_map(|s| eps.iter().map(move |&e| (*s, e))).collect();
    let rows = jobs
        .par_iter()
        .map(|(spec, e)| {
            let d = total_var * (1.0 - e);
            let rate_ardf = ardf_at_with(&spec.source(), d, tol)?.rate_bits;
            let rate_conditional = mixture_conditional_rdf(spec, d)?;
            Ok(LossRow {
                var1: spec.var1(),
                var0: spec.var0(),
                p1: spec.p1(),
                eps: *e,
                distortion: d,
                rate_ardf,
                rate_conditional,
                ratio: rate_ardf / rate_conditional,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = eps
        .iter()
        .map(|&e| {
            let ratios: Vec<f64> = rows.iter().filter(|r| r.eps == e).map(|r| r.ratio).collect();
            (e, ratios.windows(2).all(|w| w[1] > w[0]))
        })
        .collect();
    Ok(LossTable {
        lambda,
        total_var,
        rows,
        monotone,
    })
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with columns `curve_kind,gamma,D,rate_bits,err_bound`; floats carry
/// 17 significant digits, a missing `gamma` is left empty.
pub fn write_curves_csv<W: Write>(out: W, curves: &[RdCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["curve_kind", "gamma", "D", "rate_bits", "err_bound"])?;
    for curve in curves {
        for p in &curve.points {
            w.write_record([
                p.kind.as_str().to_string(),
                p.gamma.map(fmt).unwrap_or_default(),
                fmt(p.distortion),
                fmt(p.rate_bits),
                fmt(p.err_bound),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
