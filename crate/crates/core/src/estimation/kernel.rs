//! Posterior computations for one look at a centered prior through
//! `Y = √s·X + N`.
//!
//! Everything is expressed through the log likelihood ratio
//! `L(y) = ln p_Y(y) − ln φ(y)`, evaluated as a log-sum-exp over normal
//! components or atoms so that no evidence ever underflows.

use crate::error::{Error, Result};
use crate::numerics::quadrature::gl12;
use crate::numerics::quadrature::ENVELOPE_STDS;
use crate::numerics::{integrate, QuadOptions, QuadratureResult, Support};
use crate::source::{SourceModel, TabulatedDensity};

/// Breakpoints are placed at every mode when there are at most this many.
const MAX_MODE_BREAKPOINTS: usize = 16;
/// Largest `a·h` of a Gauss-Legendre panel for `exp(a·x)` weights.
const PANEL_EXPONENT: f64 = 3.0;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone)]
struct KernelComponent {
    weight: f64,
    // ln w − ½ ln(1 + s v)
    log_scale: f64,
    mean: f64,
    var: f64,
    // 1 + s v
    spread: f64,
}

#[derive(Debug, Clone)]
enum Prior {
    Components(Vec<KernelComponent>),
    // c_i = ln p_i − s x_i² / 2
    Atoms { x: Vec<f64>, c: Vec<f64> },
}

/// Posterior summary at one (centered) observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    /// `ln p_Y(y) − ln φ(y)`.
    pub log_ratio: f64,
    pub mean: f64,
    pub var: f64,
}

/// Channel at effective SNR `s > 0` for a centered copy of a source.
#[derive(Debug, Clone)]
pub struct ChannelKernel {
    prior: Prior,
    snr: f64,
    root: f64,
    offset: f64,
    second_moment: f64,
    support: Support,
}

impl ChannelKernel {
    pub fn new(source: &SourceModel, snr: f64) -> Result<Self> {
        if !(snr.is_finite() && snr > 0.0) {
            return Err(Error::Domain(format!("channel kernel needs a positive finite SNR, got {snr}")));
        }
        let root = snr.sqrt();
        if let Some(comps) = source.components() {
            let offset = source.mean();
            let comps: Vec<KernelComponent> = comps
                .iter()
                .filter(|c| c.weight > 0.0)
                .map(|c| KernelComponent {
                    weight: c.weight,
                    log_scale: c.weight.ln() - 0.5 * (snr * c.var).ln_1p(),
                    mean: c.mean - offset,
                    var: c.var,
                    spread: 1.0 + snr * c.var,
                })
                .collect();
            let second_moment = comps
                .iter()
                .map(|c| c.weight * (c.var + c.mean * c.mean))
                .sum();
            let lo = comps
                .iter()
                .map(|c| root * c.mean - ENVELOPE_STDS * c.spread.sqrt())
                .fold(f64::INFINITY, f64::min);
            let hi = comps
                .iter()
                .map(|c| root * c.mean + ENVELOPE_STDS * c.spread.sqrt())
                .fold(f64::NEG_INFINITY, f64::max);
            let mut support = Support::new(lo, hi).with_breakpoints([0.0]);
            if comps.len() <= MAX_MODE_BREAKPOINTS {
                support = support.with_breakpoints(comps.iter().map(|c| root * c.mean));
            }
            return Ok(Self {
                prior: Prior::Components(comps),
                snr,
                root,
                offset,
                second_moment,
                support,
            });
        }
        let (x, p) = match source {
            SourceModel::Tabulated(t) => tabulated_atoms(t, snr),
            _ => {
                let atoms = source.atoms().expect("non-Gaussian, non-tabulated sources are discrete");
                atoms.iter().filter(|a| a.p > 0.0).map(|a| (a.x, a.p)).unzip()
            }
        };
        Ok(Self::from_atoms(x, p, snr))
    }

    fn from_atoms(x: Vec<f64>, p: Vec<f64>, snr: f64) -> Self {
        let root = snr.sqrt();
        let total: f64 = p.iter().sum();
        let offset = x.iter().zip(&p).map(|(x, p)| x * p).sum::<f64>() / total;
        let x: Vec<f64> = x.iter().map(|x| x - offset).collect();
        let second_moment = x.iter().zip(&p).map(|(x, p)| p * x * x).sum::<f64>() / total;
        let c: Vec<f64> = x
            .iter()
            .zip(&p)
            .map(|(x, p)| (p / total).ln() - 0.5 * snr * x * x)
            .collect();
        let (xmin, xmax) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let mut support = Support::new(root * xmin - ENVELOPE_STDS, root * xmax + ENVELOPE_STDS);
        if x.len() <= MAX_MODE_BREAKPOINTS {
            support = support.with_breakpoints(x.iter().map(|v| root * v));
        } else {
            let n = MAX_MODE_BREAKPOINTS;
            support = support.with_breakpoints((0..=n).map(|i| root * (xmin + (xmax - xmin) * i as f64 / n as f64)));
        }
        Self {
            prior: Prior::Atoms { x, c },
            snr,
            root,
            offset,
            second_moment,
            support,
        }
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    /// Mean of the prior, removed before the kernel works on it.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `E X²` of the centered prior as represented by the kernel.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// Window of centered observations carrying the evidence mass.
    pub fn support(&self) -> &Support {
        &self.support
    }

    /// Posterior at a centered observation `y = y_raw − √s·E X`.
    pub fn posterior(&self, y: f64) -> Posterior {
        match &self.prior {
            Prior::Components(cs) => {
                let s = self.snr;
                let r = self.root;
                let exponent = |c: &KernelComponent| {
                    c.log_scale + (y * y * s * c.var + 2.0 * y * r * c.mean - s * c.mean * c.mean) / (2.0 * c.spread)
                };
                let comp_mean = |c: &KernelComponent| c.mean + r * c.var * (y - r * c.mean) / c.spread;
                let max = cs.iter().map(exponent).fold(f64::NEG_INFINITY, f64::max);
                let (mut s0, mut s1) = (0.0, 0.0);
                for c in cs {
                    let w = (exponent(c) - max).exp();
                    s0 += w;
                    s1 += w * comp_mean(c);
                }
                let mean = s1 / s0;
                let var = cs
                    .iter()
                    .map(|c| {
                        let w = (exponent(c) - max).exp();
                        let d = comp_mean(c) - mean;
                        w * (c.var / c.spread + d * d)
                    })
                    .sum::<f64>()
                    / s0;
                Posterior {
                    log_ratio: max + s0.ln(),
                    mean,
                    var,
                }
            }
            Prior::Atoms { x, c } => {
                let ry = self.root * y;
                let (mut max, mut arg) = (f64::NEG_INFINITY, 0);
                for (i, (xi, ci)) in x.iter().zip(c).enumerate() {
                    let e = ci + ry * xi;
                    if e > max {
                        max = e;
                        arg = i;
                    }
                }
                let xref = x[arg];
                let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
                for (xi, ci) in x.iter().zip(c) {
                    let w = (ci + ry * xi - max).exp();
                    let d = xi - xref;
                    s0 += w;
                    s1 += w * d;
                    s2 += w * d * d;
                }
                let shift = s1 / s0;
                Posterior {
                    log_ratio: max + s0.ln(),
                    mean: xref + shift,
                    var: (s2 / s0 - shift * shift).max(0.0),
                }
            }
        }
    }

    /// Evidence density `p_Y` at a centered observation.
    pub fn evidence(&self, y: f64) -> f64 {
        (self.posterior(y).log_ratio - 0.5 * y * y - LN_SQRT_2PI).exp()
    }

    /// `E[g(posterior(Y))]` under the evidence density.
    pub fn expect<F: Fn(&Posterior) -> f64>(&self, g: F, opts: &QuadOptions) -> Result<QuadratureResult> {
        integrate(
            |y| {
                let post = self.posterior(y);
                let weight = (post.log_ratio - 0.5 * y * y - LN_SQRT_2PI).exp();
                if weight == 0.0 {
                    0.0
                } else {
                    weight * g(&post)
                }
            },
            &self.support,
            opts,
        )
    }

    /// `E[var(X | Y)]`.
    pub fn mmse(&self) -> Result<QuadratureResult> {
        self.expect(|p| p.var, &options(self.second_moment))
    }

    /// `E[E[X | Y]²] = E X² − mmse`, computed without the subtraction.
    pub fn explained_variance(&self) -> Result<QuadratureResult> {
        let scale = self.second_moment * (self.snr * self.second_moment).min(1.0);
        self.expect(|p| p.mean * p.mean, &options(scale))
    }

    /// `D(P_Y ‖ N(0,1))` in nats.
    pub fn divergence(&self) -> Result<QuadratureResult> {
        // The log-ratio carries rounding of order √(s·E X²) per point, so the
        // floor is set against the mutual information it is subtracted from.
        let sm = self.snr * self.second_moment;
        self.expect(|p| p.log_ratio, &options(1e3 * sm))
    }

    /// `I(X; Y)` in nats as `s·E X²/2 − D(P_Y ‖ N(0,1))`, i.e. `h(Y) − h(N)`
    /// rearranged so that no two large entropies are subtracted.
    pub fn mutual_info_nats(&self) -> Result<QuadratureResult> {
        let d = self.divergence()?;
        Ok(QuadratureResult {
            value: (0.5 * self.snr * self.second_moment - d.value).max(0.0),
            ..d
        })
    }
}

/// Tight options relative to the size `scale` of the integral.
fn options(scale: f64) -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15 * scale.max(f64::MIN_POSITIVE),
        rel_tol: 1e-11,
        max_evaluations: 400_000,
    }
}

/// Weighted atoms for a tabulated density: composite 12-point Gauss-Legendre
/// panels inside every grid cell, fine enough that `exp(√s·x·y)` is
/// integrated to near machine precision over the observation window.
fn tabulated_atoms(t: &TabulatedDensity, snr: f64) -> (Vec<f64>, Vec<f64>) {
    let nodes = t.nodes();
    let mean = t.mean();
    let reach = nodes.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    let root = snr.sqrt();
    let rate = root * (ENVELOPE_STDS + 2.0 * root * reach) + 1.0;
    let (gx, gw) = gl12();
    let mut xs = Vec::new();
    let mut ps = Vec::new();
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((rate * (b - a) / PANEL_EXPONENT).ceil() as usize).max(1);
        let h = (b - a) / pieces as f64;
        for j in 0..pieces {
            let lo = a + h * j as f64;
            let mid = lo + 0.5 * h;
            for (t_i, w_i) in gx.iter().zip(gw) {
                let x = mid + 0.5 * h * t_i;
                let p = t.density(x) * w_i * 0.5 * h;
                if p > 0.0 {
                    xs.push(x);
                    ps.push(p);
                }
            }
        }
    }
    (xs, ps)
}
