//! JSON source specification: `{"kind": ..., "params": {...}}`.
//!
//! ```json
//! {"kind": "gaussian", "params": {"mean": 0.0, "variance": 1.0}}
//! {"kind": "gaussian_mixture", "params": {"components": [{"weight": 0.9, "mean": 0.0, "variance": 0.5555555555555556}, {"weight": 0.1, "mean": 0.0, "variance": 5.0}]}}
//! {"kind": "gaussian_mixture", "params": {"lambda": 0.5, "total_variance": 1.0, "variance1": 5.0}}
//! {"kind": "finite_discrete", "params": {"atoms": [{"x": -1.0, "p": 0.5}, {"x": 1.0, "p": 0.5}]}}
//! {"kind": "tabulated_density", "params": {"x": [-1.0, 0.0, 1.0], "f": [0.0, 1.0, 0.0], "tail_exponent": null}}
//! {"kind": "uniform", "params": {"lo": -1.7320508075688772, "hi": 1.7320508075688772}}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::{Atom, Component, MixtureSpec, SourceModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SourceSpec {
    Gaussian {
        #[serde(default)]
        mean: f64,
        variance: f64,
    },
    GaussianMixture(MixtureParams),
    FiniteDiscrete {
        atoms: Vec<AtomSpec>,
    },
    TabulatedDensity {
        x: Vec<f64>,
        f: Vec<f64>,
        #[serde(default)]
        tail_exponent: Option<f64>,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MixtureParams {
    Explicit {
        components: Vec<ComponentSpec>,
    },
    EnergyShare {
        lambda: f64,
        total_variance: f64,
        #[serde(default)]
        variance0: Option<f64>,
        variance1: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub weight: f64,
    #[serde(default)]
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub x: f64,
    pub p: f64,
}

impl SourceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<SourceModel> {
        match self {
            Self::Gaussian { mean, variance } => SourceModel::gaussian(*mean, *variance),
            Self::GaussianMixture(MixtureParams::Explicit { components }) => SourceModel::mixture(
                components
                    .iter()
                    .map(|c| Component::new(c.weight, c.mean, c.variance))
                    .collect(),
            ),
            Self::GaussianMixture(MixtureParams::EnergyShare {
                lambda,
                total_variance,
                variance0,
                variance1,
            }) => {
                let spec = match variance0 {
                    Some(v0) => MixtureSpec::from_parts(*lambda, *total_variance, *v0, *variance1)?,
                    None => MixtureSpec::new(*lambda, *total_variance, *variance1)?,
                };
                Ok(spec.source())
            }
            Self::FiniteDiscrete { atoms } => {
                SourceModel::discrete(atoms.iter().map(|a| Atom { x: a.x, p: a.p }).collect())
            }
            Self::TabulatedDensity { x, f, tail_exponent } => SourceModel::tabulated(x.clone(), f.clone(), *tail_exponent),
            Self::Uniform { lo, hi } => SourceModel::uniform(*lo, *hi),
        }
    }

    /// The mixture spec when given in energy-share form.
    pub fn mixture_spec(&self) -> Result<Option<MixtureSpec>> {
        match self {
            Self::GaussianMixture(MixtureParams::EnergyShare {
                lambda,
                total_variance,
                variance0,
                variance1,
            }) => Ok(Some(match variance0 {
                Some(v0) => MixtureSpec::from_parts(*lambda, *total_variance, *v0, *variance1)?,
                None => MixtureSpec::new(*lambda, *total_variance, *variance1)?,
            })),
            _ => Ok(None),
        }
    }
}

impl SourceModel {
    /// Parses and validates a JSON source specification.
    pub fn from_json(text: &str) -> Result<Self> {
        SourceSpec::from_json(text)?.build()
    }
}
