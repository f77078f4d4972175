//! Scalar source models: Gaussian, Gaussian mixture, finite discrete and
//! tabulated densities, plus the side-information models built on them.
//!
//! Models are validated on construction and immutable afterwards; they can
//! be shared freely across threads. Every sampler owns a private seeded
//! ChaCha stream, so equal seeds give equal sequences.

mod mixture_spec;
mod side_info;
mod spec_file;
mod tabulated;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use mixture_spec::MixtureSpec;
pub use side_info::{JointGaussian, SideInfoModel, SideSlice, DEFAULT_SLICES};
pub use spec_file::SourceSpec;
pub use tabulated::TabulatedDensity;

use crate::error::{Error, Result};

/// Tolerance on probability vectors summing to one.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// One weighted normal component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub var: f64,
}

impl Component {
    pub fn new(weight: f64, mean: f64, var: f64) -> Self {
        Self { weight, mean, var }
    }
}

/// One atom of a finite discrete source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Gaussian,
    GaussianMixture,
    FiniteDiscrete,
    TabulatedDensity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: f64,
    var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    components: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDiscrete {
    atoms: Vec<Atom>,
}

/// A scalar source distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceModel {
    Gaussian(Gaussian),
    GaussianMixture(GaussianMixture),
    FiniteDiscrete(FiniteDiscrete),
    Tabulated(TabulatedDensity),
}

fn check_probabilities<'a>(what: &str, probs: impl Iterator<Item = &'a f64>) -> Result<()> {
    let mut total = 0.0;
    for &p in probs {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidModel(format!("{what} must be nonnegative, got {p}")));
        }
        total += p;
    }
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::InvalidModel(format!("{what} sum to {total}, not 1")));
    }
    Ok(())
}

pub(crate) fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
}

// E[(μ + σZ)^k] for k ≤ 4
fn shifted_normal_moment(mu: f64, var: f64, k: u32) -> f64 {
    match k {
        0 => 1.0,
        1 => mu,
        2 => mu * mu + var,
        3 => mu * mu * mu + 3.0 * mu * var,
        4 => mu.powi(4) + 6.0 * mu * mu * var + 3.0 * var * var,
        _ => unreachable!("moment order checked by caller"),
    }
}

fn check_order(k: u32) -> Result<()> {
    if (1..=4).contains(&k) {
        Ok(())
    } else {
        Err(Error::Domain(format!("moment order {k} outside 1..=4")))
    }
}

impl SourceModel {
    pub fn gaussian(mean: f64, var: f64) -> Result<Self> {
        if !(mean.is_finite() && var.is_finite() && var > 0.0) {
            return Err(Error::InvalidModel(format!(
                "gaussian needs finite mean and positive variance, got ({mean}, {var})"
            )));
        }
        Ok(Self::Gaussian(Gaussian { mean, var }))
    }

    pub fn mixture(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidModel("mixture has no components".into()));
        }
        check_probabilities("mixture weights", components.iter().map(|c| &c.weight))?;
        for c in &components {
            if !(c.mean.is_finite() && c.var.is_finite() && c.var > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "mixture component needs finite mean and positive variance, got ({}, {})",
                    c.mean, c.var
                )));
            }
        }
        Ok(Self::GaussianMixture(GaussianMixture { components }))
    }

    pub fn discrete(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidModel("discrete source has no atoms".into()));
        }
        check_probabilities("atom probabilities", atoms.iter().map(|a| &a.p))?;
        if atoms.iter().any(|a| !a.x.is_finite()) {
            return Err(Error::InvalidModel("atom locations must be finite".into()));
        }
        Ok(Self::FiniteDiscrete(FiniteDiscrete { atoms }))
    }

    /// Discrete source from `(x, p)` pairs.
    pub fn discrete_from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::discrete(pairs.iter().map(|&(x, p)| Atom { x, p }).collect())
    }

    pub fn tabulated(x: Vec<f64>, f: Vec<f64>, tail_exponent: Option<f64>) -> Result<Self> {
        Ok(Self::Tabulated(TabulatedDensity::new(x, f, tail_exponent)?))
    }

    /// Uniform density on `[lo, hi]`, stored as a tabulated density.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Ok(Self::Tabulated(TabulatedDensity::uniform(lo, hi)?))
    }

    /// Zero-mean uniform density with the given variance.
    pub fn uniform_with_variance(var: f64) -> Result<Self> {
        let r = (3.0 * var).sqrt();
        Self::uniform(-r, r)
    }

    /// Equiprobable `±a` source with variance `a²`.
    pub fn two_point(a: f64) -> Result<Self> {
        Self::discrete_from_pairs(&[(-a, 0.5), (a, 0.5)])
    }

    pub fn kind(&self) -> SourceKind {
        match self {
            Self::Gaussian(_) => SourceKind::Gaussian,
            Self::GaussianMixture(_) => SourceKind::GaussianMixture,
            Self::FiniteDiscrete(_) => SourceKind::FiniteDiscrete,
            Self::Tabulated(_) => SourceKind::TabulatedDensity,
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Self::FiniteDiscrete(_))
    }

    /// Normal components of Gaussian and mixture sources.
    pub fn components(&self) -> Option<Vec<Component>> {
        match self {
            Self::Gaussian(g) => Some(vec![Component::new(1.0, g.mean, g.var)]),
            Self::GaussianMixture(m) => Some(m.components.clone()),
            _ => None,
        }
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match self {
            Self::FiniteDiscrete(d) => Some(&d.atoms),
            _ => None,
        }
    }

    pub fn as_tabulated(&self) -> Option<&TabulatedDensity> {
        match self {
            Self::Tabulated(t) => Some(t),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Gaussian(g) => g.mean,
            Self::GaussianMixture(m) => m.components.iter().map(|c| c.weight * c.mean).sum(),
            Self::FiniteDiscrete(d) => d.atoms.iter().map(|a| a.p * a.x).sum(),
            Self::Tabulated(t) => t.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self.central_moment(2) {
            Ok(v) => v,
            Err(_) => unreachable!("second moments are finite for every constructed source"),
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Raw moment `E X^k`, `k ∈ 1..=4`.
    pub fn moment(&self, k: u32) -> Result<f64> {
        self.moment_with_error(k).map(|(v, _)| v)
    }

    /// Raw moment with an absolute error bound (zero for closed forms).
    pub fn moment_with_error(&self, k: u32) -> Result<(f64, f64)> {
        check_order(k)?;
        let value = match self {
            Self::Gaussian(g) => shifted_normal_moment(g.mean, g.var, k),
            Self::GaussianMixture(m) => m
                .components
                .iter()
                .map(|c| c.weight * shifted_normal_moment(c.mean, c.var, k))
                .sum(),
            Self::FiniteDiscrete(d) => d.atoms.iter().map(|a| a.p * a.x.powi(k as i32)).sum(),
            Self::Tabulated(t) => return t.moment_with_error(k),
        };
        Ok((value, 0.0))
    }

    /// Central moment `E (X - EX)^k`, `k ∈ 1..=4`.
    pub fn central_moment(&self, k: u32) -> Result<f64> {
        check_order(k)?;
        let mu = self.mean();
        Ok(match self {
            Self::Gaussian(g) => shifted_normal_moment(0.0, g.var, k),
            Self::GaussianMixture(m) => m
                .components
                .iter()
                .map(|c| c.weight * shifted_normal_moment(c.mean - mu, c.var, k))
                .sum(),
            Self::FiniteDiscrete(d) => d.atoms.iter().map(|a| a.p * (a.x - mu).powi(k as i32)).sum(),
            Self::Tabulated(t) => {
                if k == 1 {
                    0.0
                } else {
                    t.central_moment(k)?
                }
            }
        })
    }

    /// Skewness and kurtosis `(E(X-μ)³/σ³, E(X-μ)⁴/σ⁴)`.
    pub fn standardized_moments(&self) -> Result<(f64, f64)> {
        let var = self.variance();
        Ok((
            self.central_moment(3)? / var.powf(1.5),
            self.central_moment(4)? / (var * var),
        ))
    }

    /// Probability density at `x`; finite discrete sources have none.
    pub fn density(&self, x: f64) -> Result<f64> {
        match self {
            Self::Gaussian(g) => Ok(normal_pdf(x, g.mean, g.var)),
            Self::GaussianMixture(m) => Ok(m.components.iter().map(|c| c.weight * normal_pdf(x, c.mean, c.var)).sum()),
            Self::FiniteDiscrete(_) => Err(Error::Unsupported(
                "finite discrete source has no density; use its atoms (mass function)".into(),
            )),
            Self::Tabulated(t) => Ok(t.density(x)),
        }
    }

    /// Closed support `[lo, hi]`; infinite for Gaussian sources.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Gaussian(_) | Self::GaussianMixture(_) => (f64::NEG_INFINITY, f64::INFINITY),
            Self::FiniteDiscrete(d) => d.atoms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                (lo.min(a.x), hi.max(a.x))
            }),
            Self::Tabulated(t) => (t.lo(), t.hi()),
        }
    }

    /// Window holding all but a negligible fraction of the mass: the
    /// support when bounded, otherwise `± width` standard deviations around
    /// every component.
    pub fn effective_support(&self, width: f64) -> (f64, f64) {
        match self.components() {
            Some(cs) => cs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                let s = c.var.sqrt();
                (lo.min(c.mean - width * s), hi.max(c.mean + width * s))
            }),
            None => self.support(),
        }
    }

    /// The same source shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        match self {
            Self::Gaussian(g) => Self::Gaussian(Gaussian {
                mean: g.mean + offset,
                var: g.var,
            }),
            Self::GaussianMixture(m) => Self::GaussianMixture(GaussianMixture {
                components: m
                    .components
                    .iter()
                    .map(|c| Component::new(c.weight, c.mean + offset, c.var))
                    .collect(),
            }),
            Self::FiniteDiscrete(d) => Self::FiniteDiscrete(FiniteDiscrete {
                atoms: d.atoms.iter().map(|a| Atom { x: a.x + offset, p: a.p }).collect(),
            }),
            Self::Tabulated(t) => {
                let x: Vec<f64> = t.nodes().iter().map(|x| x + offset).collect();
                let f: Vec<f64> = t.nodes().iter().map(|&x| t.density(x)).collect();
                Self::Tabulated(
                    TabulatedDensity::new(x, f, t.tail_exponent()).expect("shift preserves validity of a valid table"),
                )
            }
        }
    }

    /// Zero-mean copy of the source.
    pub fn centered(&self) -> Self {
        let mu = self.mean();
        if mu == 0.0 {
            self.clone()
        } else {
            self.shifted(-mu)
        }
    }

    /// Seeded i.i.d. sample of size `n`.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample_one(&mut rng)).collect()
    }

    pub(crate) fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian(g) => g.mean + g.var.sqrt() * rng.sample::<f64, _>(StandardNormal),
            Self::GaussianMixture(m) => {
                let c = pick(rng, m.components.iter().map(|c| c.weight), m.components.len());
                let c = &m.components[c];
                c.mean + c.var.sqrt() * rng.sample::<f64, _>(StandardNormal)
            }
            Self::FiniteDiscrete(d) => d.atoms[pick(rng, d.atoms.iter().map(|a| a.p), d.atoms.len())].x,
            Self::Tabulated(t) => t.sample_one(rng),
        }
    }

    /// Uniform-grid discretization with masses proportional to the density
    /// at `levels` points on `[lo, hi]`.
    pub fn discretize(&self, levels: usize, lo: f64, hi: f64) -> Result<Self> {
        if levels < 2 || !(lo < hi) {
            return Err(Error::Domain(format!(
                "discretization needs ≥ 2 levels on a nonempty window, got {levels} on [{lo}, {hi}]"
            )));
        }
        let step = (hi - lo) / (levels - 1) as f64;
        let xs: Vec<f64> = (0..levels).map(|i| lo + step * i as f64).collect();
        let mut ws = xs.iter().map(|&x| self.density(x)).collect::<Result<Vec<f64>>>()?;
        let total: f64 = ws.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("discretization window holds no mass".into()));
        }
        ws.iter_mut().for_each(|w| *w /= total);
        Self::discrete(xs.into_iter().zip(ws).map(|(x, p)| Atom { x, p }).collect())
    }

    /// Short human-readable descriptor.
    pub fn describe(&self) -> String {
        match self {
            Self::Gaussian(g) => format!("gaussian(mean={}, var={})", g.mean, g.var),
            Self::GaussianMixture(m) => {
                let parts: Vec<String> = m
                    .components
                    .iter()
                    .map(|c| format!("{}*N({}, {})", c.weight, c.mean, c.var))
                    .collect();
                format!("gaussian_mixture({})", parts.join(" + "))
            }
            Self::FiniteDiscrete(d) => format!("finite_discrete({} atoms)", d.atoms.len()),
            Self::Tabulated(t) => format!("tabulated_density({} nodes on [{}, {}])", t.nodes().len(), t.lo(), t.hi()),
        }
    }
}

fn pick<R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = f64>, len: usize) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    len - 1
}
