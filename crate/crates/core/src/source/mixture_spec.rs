use crate::error::{Error, Result};

use super::{Component, SideInfoModel, SourceModel, PROBABILITY_TOL};

/// Two zero-mean normal components parametrized by the energy share
/// `λ = P₀σ₀²/σ_X²` of the narrow component.
///
/// The weights follow from the variances: `P₀ = λσ_X²/σ₀²` and
/// `P₁ = (1-λ)σ_X²/σ₁²`, which must sum to one. Admissible parameters satisfy
/// `σ₁² > σ_X² > σ₀²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSpec {
    lambda: f64,
    total_var: f64,
    var0: f64,
    var1: f64,
    p0: f64,
    p1: f64,
}

impl MixtureSpec {
    /// Spec with `σ₀²` solved from `P₀ + P₁ = 1`.
    pub fn new(lambda: f64, total_var: f64, var1: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) || lambda == 0.0 {
            return Err(Error::InvalidModel(format!("energy share λ = {lambda} must lie in (0, 1)")));
        }
        if !(total_var > 0.0 && var1 > total_var) {
            return Err(Error::InvalidModel(format!(
                "need σ₁² > σ_X² > 0, got σ₁² = {var1}, σ_X² = {total_var}"
            )));
        }
        let p1 = (1.0 - lambda) * total_var / var1;
        let p0 = 1.0 - p1;
        let var0 = lambda * total_var / p0;
        Self::validated(lambda, total_var, var0, var1, p0, p1)
    }

    /// Spec from all four parameters; rejects triples with `P₀ + P₁ ≠ 1`.
    pub fn from_parts(lambda: f64, total_var: f64, var0: f64, var1: f64) -> Result<Self> {
        if !(var0 > 0.0 && var1 > 0.0 && total_var > 0.0) {
            return Err(Error::InvalidModel("mixture variances must be positive".into()));
        }
        let p0 = lambda * total_var / var0;
        let p1 = (1.0 - lambda) * total_var / var1;
        if (p0 + p1 - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::InvalidModel(format!(
                "P₀ + P₁ = {} ≠ 1 for λ = {lambda}, σ_X² = {total_var}, σ₀² = {var0}, σ₁² = {var1}",
                p0 + p1
            )));
        }
        Self::validated(lambda, total_var, var0, var1, p0, p1)
    }

    /// Spec from the component variances and total variance; `λ` follows.
    pub fn from_variances(total_var: f64, var0: f64, var1: f64) -> Result<Self> {
        if !(var1 > total_var && total_var > var0 && var0 > 0.0) {
            return Err(Error::InvalidModel(format!(
                "need σ₁² > σ_X² > σ₀² > 0, got ({var1}, {total_var}, {var0})"
            )));
        }
        let p0 = (var1 - total_var) / (var1 - var0);
        let p1 = 1.0 - p0;
        let lambda = p0 * var0 / total_var;
        Self::validated(lambda, total_var, var0, var1, p0, p1)
    }

    fn validated(lambda: f64, total_var: f64, var0: f64, var1: f64, p0: f64, p1: f64) -> Result<Self> {
        if !(var1 > total_var && total_var > var0) {
            return Err(Error::InvalidModel(format!(
                "need σ₁² > σ_X² > σ₀², got σ₁² = {var1}, σ_X² = {total_var}, σ₀² = {var0}"
            )));
        }
        if !(p0 > 0.0 && p1 > 0.0) {
            return Err(Error::InvalidModel(format!("component weights ({p0}, {p1}) must be positive")));
        }
        Ok(Self {
            lambda,
            total_var,
            var0,
            var1,
            p0,
            p1,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn total_var(&self) -> f64 {
        self.total_var
    }
    pub fn var0(&self) -> f64 {
        self.var0
    }
    pub fn var1(&self) -> f64 {
        self.var1
    }
    pub fn p0(&self) -> f64 {
        self.p0
    }
    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn components(&self) -> [Component; 2] {
        [
            Component::new(self.p0, 0.0, self.var0),
            Component::new(self.p1, 0.0, self.var1),
        ]
    }

    pub fn source(&self) -> SourceModel {
        SourceModel::mixture(self.components().to_vec()).expect("validated mixture spec")
    }

    /// Side information `S` revealing the active component.
    pub fn indicator_side_info(&self) -> SideInfoModel {
        SideInfoModel::component_indicator(&self.source()).expect("mixture source has components")
    }
}
