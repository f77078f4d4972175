use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

use super::{check_probabilities, Atom, Component, SourceModel};

/// Default number of equiprobable slices for a jointly Gaussian `(X, Z)`.
pub const DEFAULT_SLICES: usize = 64;

/// Tolerance on the marginal moments rebuilt from the conditionals.
const MARGINAL_TOL: f64 = 1e-8;

/// One value of the side information with its prior and `X | Z = z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SideSlice {
    pub z: f64,
    pub prob: f64,
    pub conditional: SourceModel,
}

/// Parameters of a jointly Gaussian `(X, Z)` pair with standardized `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointGaussian {
    pub mean_x: f64,
    pub var_x: f64,
    pub rho: f64,
    pub slices: usize,
}

/// Finite side information `Z` for a source `X`.
///
/// `Z` only enters through the conditionals `X | Z = z`; nothing here refers
/// to the channel noise, so `Z` is independent of it by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfoModel {
    slices: Vec<SideSlice>,
    marginal: SourceModel,
    joint_gaussian: Option<JointGaussian>,
}

impl SideInfoModel {
    /// Model from explicit slices. Without a declared marginal, one is built
    /// from the conditionals (Gaussian/mixture or finite discrete only).
    pub fn new(slices: Vec<SideSlice>, marginal: Option<SourceModel>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::InvalidModel("side information has no values".into()));
        }
        check_probabilities("side-information priors", slices.iter().map(|s| &s.prob))?;
        let marginal = match marginal {
            Some(m) => m,
            None => marginal_of(&slices)?,
        };
        let model = Self {
            slices,
            marginal,
            joint_gaussian: None,
        };
        model.check_marginal()?;
        Ok(model)
    }

    /// Jointly Gaussian `(X, Z)` with correlation `rho`, with `Z` cut into
    /// `slices` equiprobable quantile bins.
    ///
    /// Each bin carries the exact conditional normal `N(μ + ρσ z_b, σ²(1-ρ²))`
    /// at the bin's conditional mean `z_b`; the representatives are rescaled
    /// to unit second moment so that the mixture of conditionals keeps the
    /// declared mean and variance.
    pub fn jointly_gaussian(mean_x: f64, var_x: f64, rho: f64, slices: usize) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::InvalidModel(format!("correlation {rho} must lie in (-1, 1)")));
        }
        if slices < 2 {
            return Err(Error::InvalidModel("need at least two slices".into()));
        }
        let marginal = SourceModel::gaussian(mean_x, var_x)?;
        let std_normal = Normal::standard();
        let n = slices as f64;
        let edge = |b: usize| -> f64 {
            if b == 0 || b == slices {
                0.0
            } else {
                std_normal.pdf(std_normal.inverse_cdf(b as f64 / n))
            }
        };
        let mut reps: Vec<f64> = (0..slices).map(|b| n * (edge(b) - edge(b + 1))).collect();
        let mean = reps.iter().sum::<f64>() / n;
        reps.iter_mut().for_each(|z| *z -= mean);
        let scale = (reps.iter().map(|z| z * z).sum::<f64>() / n).sqrt();
        reps.iter_mut().for_each(|z| *z /= scale);

        let sd = var_x.sqrt();
        let cond_var = var_x * (1.0 - rho * rho);
        let slices_vec = reps
            .into_iter()
            .map(|z| {
                Ok(SideSlice {
                    z,
                    prob: 1.0 / n,
                    conditional: SourceModel::gaussian(mean_x + rho * sd * z, cond_var)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = Self::new(slices_vec, Some(marginal))?;
        model.joint_gaussian = Some(JointGaussian {
            mean_x,
            var_x,
            rho,
            slices,
        });
        Ok(model)
    }

    /// Side information revealing which normal component of a mixture (or
    /// Gaussian) source is active.
    pub fn component_indicator(source: &SourceModel) -> Result<Self> {
        let comps = source
            .components()
            .ok_or_else(|| Error::Unsupported("component indicator needs a Gaussian or mixture source".into()))?;
        let slices = comps
            .iter()
            .enumerate()
            .map(|(i, c)| {
                Ok(SideSlice {
                    z: i as f64,
                    prob: c.weight,
                    conditional: SourceModel::gaussian(c.mean, c.var)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(slices, Some(source.clone()))
    }

    fn check_marginal(&self) -> Result<()> {
        let mean: f64 = self.slices.iter().map(|s| s.prob * s.conditional.mean()).sum();
        let within: f64 = self.slices.iter().map(|s| s.prob * s.conditional.variance()).sum();
        let between: f64 = self
            .slices
            .iter()
            .map(|s| s.prob * (s.conditional.mean() - mean).powi(2))
            .sum();
        let (m, v) = (self.marginal.mean(), self.marginal.variance());
        if (mean - m).abs() > MARGINAL_TOL * (1.0 + m.abs()) {
            return Err(Error::InvalidModel(format!(
                "conditionals give marginal mean {mean}, declared {m}"
            )));
        }
        if (within + between - v).abs() > MARGINAL_TOL * v.max(1.0) {
            return Err(Error::InvalidModel(format!(
                "conditionals give marginal variance {}, declared {v}",
                within + between
            )));
        }
        Ok(())
    }

    pub fn slices(&self) -> &[SideSlice] {
        &self.slices
    }

    pub fn marginal(&self) -> &SourceModel {
        &self.marginal
    }

    pub fn joint_gaussian(&self) -> Option<&JointGaussian> {
        self.joint_gaussian.as_ref()
    }

    pub fn is_jointly_gaussian(&self) -> bool {
        self.joint_gaussian.is_some()
    }

    /// `var(X|Z) = E_Z[var(X|Z=z)]`.
    pub fn mean_conditional_variance(&self) -> f64 {
        self.slices.iter().map(|s| s.prob * s.conditional.variance()).sum()
    }

    /// `(E_Z[var(X|Z=z)²], var(X|Z)²)`.
    pub fn jensen_terms(&self) -> (f64, f64) {
        let lhs = self
            .slices
            .iter()
            .map(|s| s.prob * s.conditional.variance().powi(2))
            .sum();
        let rhs = self.mean_conditional_variance().powi(2);
        (lhs, rhs)
    }
}

fn marginal_of(slices: &[SideSlice]) -> Result<SourceModel> {
    if slices.iter().all(|s| s.conditional.components().is_some()) {
        let comps: Vec<Component> = slices
            .iter()
            .flat_map(|s| {
                let p = s.prob;
                s.conditional
                    .components()
                    .unwrap_or_default()
                    .into_iter()
                    .map(move |c| Component::new(p * c.weight, c.mean, c.var))
            })
            .collect();
        return SourceModel::mixture(comps);
    }
    if slices.iter().all(|s| s.conditional.atoms().is_some()) {
        let atoms: Vec<Atom> = slices
            .iter()
            .flat_map(|s| {
                let p = s.prob;
                s.conditional
                    .atoms()
                    .unwrap_or_default()
                    .iter()
                    .map(move |a| Atom { x: a.x, p: p * a.p })
            })
            .collect();
        return SourceModel::discrete(atoms);
    }
    Err(Error::InvalidModel(
        "cannot derive the marginal of mixed or tabulated conditionals; declare it".into(),
    ))
}
