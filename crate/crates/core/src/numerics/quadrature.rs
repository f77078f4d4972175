//! Adaptive Gauss-Kronrod quadrature on a finite window of the real line.
//!
//! Every integrand in this crate carries a Gaussian envelope, so infinite
//! integrals are truncated to `mean ± 12·std` of the dominant Gaussian factor
//! ([`Support::gaussian_envelope`]); the discarded mass is below `1e-32`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Number of standard deviations kept on each side of a Gaussian envelope.
pub const ENVELOPE_STDS: f64 = 12.0;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// 7-point Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Outcome of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

/// Integration window with optional interior breakpoints (kinks, modes,
/// discontinuities) that panels must not straddle.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
    pub breakpoints: Vec<f64>,
}

impl Support {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            breakpoints: Vec::new(),
        }
    }

    /// `mean ± 12·std`.
    pub fn gaussian_envelope(mean: f64, std: f64) -> Self {
        Self::new(mean - ENVELOPE_STDS * std, mean + ENVELOPE_STDS * std)
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }

    fn panels(&self) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|b| b.is_finite() && *b > self.lo && *b < self.hi)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        let mut edges = Vec::with_capacity(cuts.len() + 2);
        edges.push(self.lo);
        edges.extend(cuts);
        edges.push(self.hi);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Stopping rule and budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evaluations: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_evaluations: 200_000,
        }
    }
}

impl QuadOptions {
    pub fn absolute(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    // set once the panel error sits at the rounding floor
    exhausted: bool,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // exhausted panels sink to the bottom of the heap
        (!self.exhausted)
            .cmp(&!other.exhausted)
            .then(self.error.total_cmp(&other.error))
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    let exhausted = error <= floor || (b - a).abs() <= 1e3 * f64::EPSILON * (a.abs() + b.abs());
    if floor > f64::MIN_POSITIVE {
        error = error.max(floor);
    }
    Panel {
        a,
        b,
        value,
        error,
        exhausted,
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over `support`.
///
/// Panels are bisected in order of decreasing error until the summed error
/// estimate meets `max(abs_tol, rel_tol·|value|)` or every remaining panel is
/// at the rounding floor.
pub fn integrate<F: Fn(f64) -> f64>(f: F, support: &Support, opts: &QuadOptions) -> Result<QuadratureResult> {
    if !(support.lo.is_finite() && support.hi.is_finite()) || support.hi < support.lo {
        return Err(Error::Domain(format!(
            "integration window [{}, {}] must be finite and ordered",
            support.lo, support.hi
        )));
    }
    if support.hi == support.lo {
        return Ok(QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for (a, b) in support.panels() {
        heap.push(kronrod15(&f, a, b));
        evaluations += 15;
    }
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature {
                estimate: value,
                abs_error: error,
                evaluations,
            });
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        let worst = *heap.peek().expect("at least one panel");
        if error <= target || worst.exhausted {
            return Ok(QuadratureResult {
                value,
                abs_error_estimate: error,
                evaluations,
            });
        }
        if evaluations + 30 > opts.max_evaluations {
            return Err(Error::Quadrature {
                estimate: value,
                abs_error: error,
                evaluations,
            });
        }
        let panel = heap.pop().expect("peeked");
        let mid = 0.5 * (panel.a + panel.b);
        heap.push(kronrod15(&f, panel.a, mid));
        heap.push(kronrod15(&f, mid, panel.b));
        evaluations += 30;
    }
}

/// [`integrate`] with an absolute tolerance and the default budget.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, tol: f64, support: &Support) -> Result<QuadratureResult> {
    integrate(f, support, &QuadOptions::absolute(tol))
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached 12-point Gauss-Legendre rule.
pub(crate) fn gl12() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn normal_pdf(x: f64, var: f64) -> f64 {
        (-0.5 * x * x / var).exp() / (2.0 * PI * var).sqrt()
    }

    #[test]
    fn standard_normal_normalization() {
        let r = integrate_line(|x| normal_pdf(x, 1.0), 1e-10, &Support::gaussian_envelope(0.0, 1.0)).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-10, "{r:?}");
        assert!(r.abs_error_estimate >= 0.0);
    }

    #[test]
    fn second_moment_of_wider_normal() {
        let std = 2f64.sqrt();
        let r = integrate_line(|x| x * x * normal_pdf(x, 2.0), 1e-10, &Support::gaussian_envelope(0.0, std)).unwrap();
        assert!((r.value - 2.0).abs() <= 1e-8, "{r:?}");
    }

    #[test]
    fn negative_entropy_of_standard_normal() {
        let expected = -0.5 * (2.0 * PI * E).log2();
        assert!((expected + 2.047096).abs() < 1e-6);
        let r = integrate_line(
            |x| {
                let p = normal_pdf(x, 1.0);
                if p > 0.0 {
                    p * p.log2()
                } else {
                    0.0
                }
            },
            1e-10,
            &Support::gaussian_envelope(0.0, 1.0),
        )
        .unwrap();
        assert!((r.value - expected).abs() <= 1e-6, "{} vs {expected}", r.value);
    }

    #[test]
    fn breakpoints_handle_discontinuities() {
        let step = |x: f64| if x.abs() <= 1.0 { 0.5 } else { 0.0 };
        let r = integrate_line(step, 1e-12, &Support::new(-3.0, 3.0).with_breakpoints([-1.0, 1.0])).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_evaluations: 45,
        };
        let err = integrate(|x: f64| (1.0 / x.abs().max(1e-300)).sqrt(), &Support::new(-1.0, 1.0), &opts).unwrap_err();
        assert!(matches!(err, Error::Quadrature { evaluations, .. } if evaluations <= 45));
    }

    #[test]
    fn tighter_tolerance_does_not_increase_error() {
        let f = |x: f64| (x.sin() * 3.0).exp() * normal_pdf(x, 1.0);
        let s = Support::gaussian_envelope(0.0, 1.0);
        let loose = integrate_line(f, 1e-4, &s).unwrap();
        let tight = integrate_line(f, 1e-12, &s).unwrap();
        assert!(tight.abs_error_estimate <= loose.abs_error_estimate);
        assert!((tight.value - loose.value).abs() <= loose.abs_error_estimate.max(1e-4));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
