//! Unconditional successive refinement: `L` descriptions per stage, each
//! encoded at per-description distortion `dᵢ` without looking at the others,
//! compared against the conditional (successively refinable) baseline.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::ardf::fmt as fmt_float;
use crate::error::{Error, Result};
use crate::estimation::{explained_variance, mmse, ChannelPoint};
use crate::information::mutual_info_bits;
use crate::numerics::{try_limit_at_zero, LimitEstimate};
use crate::source::SourceModel;

/// Largest number of descriptions for the low-rate additivity check.
pub const MAX_ADDITIVITY_K: u32 = 8;

/// Joint distortion of `L` unconditional descriptions, each at distortion
/// `d`, refining a reconstruction with distortion `d_prev`:
/// `D = d / (L − (L−1)·d/d_prev)`.
pub fn joint_distortion(d: f64, d_prev: f64, descriptions: u32) -> Result<f64> {
    if descriptions == 0 {
        return Err(Error::Domain("number of descriptions must be at least 1".into()));
    }
    if !(d_prev > 0.0 && d_prev.is_finite()) {
        return Err(Error::Domain(format!("prior distortion {d_prev} must be positive and finite")));
    }
    if !(d > 0.0) {
        return Err(Error::Domain(format!("per-description distortion {d} must be positive")));
    }
    if d > d_prev {
        return Err(Error::Domain(format!(
            "per-description distortion {d} exceeds the prior distortion {d_prev}; a refinement cannot be worse than its prior"
        )));
    }
    let l = descriptions as f64;
    Ok(d / (l - (l - 1.0) * d / d_prev))
}

/// Inverse of [`joint_distortion`]: the per-description distortion that
/// takes `d_prev` to the joint target `target`.
pub fn per_description_distortion(target: f64, d_prev: f64, descriptions: u32) -> f64 {
    let l = descriptions as f64;
    l * target / (1.0 + (l - 1.0) * target / d_prev)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleRule {
    /// `Dᵢ = σ²·(D_M/σ²)^{i/M}`.
    GeometricD,
    /// Equal per-stage rate.
    EqualRate,
    /// Caller-supplied targets.
    Explicit,
}

impl ScheduleRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GeometricD => "geometric_D",
            Self::EqualRate => "equal_rate",
            Self::Explicit => "explicit",
        }
    }
}

impl fmt::Display for ScheduleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "geometric" | "geometric_d" => Ok(Self::GeometricD),
            "equal_rate" | "equal-rate" => Ok(Self::EqualRate),
            "explicit" => Ok(Self::Explicit),
            other => Err(Error::Domain(format!(
                "unknown schedule rule '{other}' (expected geometric, equal_rate or explicit)"
            ))),
        }
    }
}

/// Stage targets and the per-description quantities that realize them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementSchedule {
    pub variance: f64,
    pub descriptions: u32,
    pub rule: ScheduleRule,
    /// Joint distortions `D₁ > … > D_M`.
    pub targets: Vec<f64>,
    /// Per-description distortions `d₁..d_M`.
    pub per_description: Vec<f64>,
    /// Per-description rates `r₁..r_M`, bits.
    pub rates: Vec<f64>,
}

impl RefinementSchedule {
    /// Schedule through the given joint targets, validated against every
    /// invariant.
    pub fn explicit(variance: f64, targets: Vec<f64>, descriptions: u32) -> Result<Self> {
        Self::from_targets(variance, targets, descriptions, ScheduleRule::Explicit)
    }

    fn from_targets(variance: f64, targets: Vec<f64>, descriptions: u32, rule: ScheduleRule) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidModel(format!("source variance {variance} must be positive and finite")));
        }
        if descriptions == 0 {
            return Err(Error::InvalidModel("number of descriptions L must be at least 1".into()));
        }
        if targets.is_empty() {
            return Err(Error::InvalidModel("a schedule needs at least one stage".into()));
        }
        let mut prev = variance;
        let mut per_description = Vec::with_capacity(targets.len());
        let mut rates = Vec::with_capacity(targets.len());
        for (i, &t) in targets.iter().enumerate() {
            if !(t > 0.0) {
                return Err(Error::InvalidModel(format!("stage {} target D = {t} must be positive", i + 1)));
            }
            if !(t < prev) {
                return Err(Error::InvalidModel(format!(
                    "stage targets must decrease strictly from D₀ = σ² = {variance}: D{} = {t} is not below {prev}",
                    i + 1
                )));
            }
            let d = per_description_distortion(t, prev, descriptions);
            per_description.push(d);
            rates.push(0.5 * (prev / d).log2());
            prev = t;
        }
        Ok(Self {
            variance,
            descriptions,
            rule,
            targets,
            per_description,
            rates,
        })
    }

    pub fn stages(&self) -> usize {
        self.targets.len()
    }

    pub fn final_distortion(&self) -> f64 {
        *self.targets.last().expect("schedules are nonempty")
    }
}

/// Builds an `M`-stage schedule from `σ²` down to `d_final` by `rule`.
/// Explicit schedules go through [`RefinementSchedule::explicit`].
pub fn build_schedule(variance: f64, d_final: f64, descriptions: u32, stages: u32, rule: ScheduleRule) -> Result<RefinementSchedule> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidModel(format!("source variance {variance} must be positive and finite")));
    }
    if !(d_final > 0.0 && d_final < variance) {
        return Err(Error::InvalidModel(format!("final distortion {d_final} must lie in (0, σ² = {variance})")));
    }
    if stages == 0 {
        return Err(Error::InvalidModel("number of stages M must be at least 1".into()));
    }
    let ratio = d_final / variance;
    let m = stages as f64;
    let targets: Vec<f64> = match rule {
        ScheduleRule::GeometricD => (1..=stages).map(|i| variance * ratio.powf(i as f64 / m)).collect(),
        // the per-stage rate depends on Dᵢ/Dᵢ₋₁ alone, so equal rates force a
        // constant ratio and reproduce the geometric targets
        ScheduleRule::EqualRate => {
            let rho = ratio.powf(1.0 / m);
            let mut t = Vec::with_capacity(stages as usize);
            let mut prev = variance;
            for i in 1..=stages {
                prev = if i == stages { d_final } else { prev * rho };
                t.push(prev);
            }
            t
        }
        ScheduleRule::Explicit => {
            return Err(Error::InvalidModel(
                "explicit schedules need their stage targets; use RefinementSchedule::explicit".into(),
            ))
        }
    };
    RefinementSchedule::from_targets(variance, targets, descriptions, rule)
}

/// Cumulative unconditional rates against the conditional baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementComparison {
    pub schedule: RefinementSchedule,
    /// `Rᵢ = L·Σ_{j≤i} r_j`, bits.
    pub unconditional: Vec<f64>,
    /// `R*ᵢ = ½log₂(σ²/Dᵢ)`, bits.
    pub conditional: Vec<f64>,
    pub loss: Vec<f64>,
}

impl RefinementComparison {
    pub fn total_rate(&self) -> f64 {
        *self.unconditional.last().expect("schedules are nonempty")
    }

    pub fn total_loss(&self) -> f64 {
        *self.loss.last().expect("schedules are nonempty")
    }
}

pub fn compare(schedule: &RefinementSchedule) -> RefinementComparison {
    let l = schedule.descriptions as f64;
    let mut sum = 0.0;
    let unconditional: Vec<f64> = schedule
        .rates
        .iter()
        .map(|r| {
            sum += l * r;
            sum
        })
        .collect();
    let conditional: Vec<f64> = schedule.targets.iter().map(|d| 0.5 * (schedule.variance / d).log2()).collect();
    let loss = unconditional.iter().zip(&conditional).map(|(u, c)| u - c).collect();
    RefinementComparison {
        schedule: schedule.clone(),
        unconditional,
        conditional,
        loss,
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "stage",
    "D_target",
    "d_per_desc",
    "r_per_desc_bits",
    "R_uncond_bits",
    "R_cond_bits",
    "loss_bits",
];

/// One row per stage. With more than one comparison a leading `M` column
/// tells the blocks apart.
pub fn write_comparisons_csv<W: Write>(out: W, comparisons: &[RefinementComparison]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let tagged = comparisons.len() > 1;
    let mut header: Vec<&str> = Vec::with_capacity(8);
    if tagged {
        header.push("M");
    }
    header.extend(CSV_HEADER);
    w.write_record(&header)?;
    for c in comparisons {
        let s = &c.schedule;
        for i in 0..s.stages() {
            let mut row = Vec::with_capacity(8);
            if tagged {
                row.push(s.stages().to_string());
            }
            row.extend([
                (i + 1).to_string(),
                fmt_float(s.targets[i]),
                fmt_float(s.per_description[i]),
                fmt_float(s.rates[i]),
                fmt_float(c.unconditional[i]),
                fmt_float(c.conditional[i]),
                fmt_float(c.loss[i]),
            ]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The two low-rate limits for `k` unconditional descriptions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditivityReport {
    pub source: String,
    pub k: u32,
    /// `lim (1/γ)·I(X; Y₁..Y_k)`, bits.
    pub mutual_info: LimitEstimate,
    /// `k·(log₂e/2)·σ²`.
    pub mutual_info_expected: f64,
    /// `lim (1/γ)·(1/mmse(kγ) − 1/σ²)`.
    pub inverse_distortion: LimitEstimate,
    /// `k`.
    pub inverse_distortion_expected: f64,
}

impl AdditivityReport {
    pub fn mutual_info_relative_error(&self) -> f64 {
        ((self.mutual_info.value - self.mutual_info_expected) / self.mutual_info_expected).abs()
    }

    pub fn inverse_distortion_relative_error(&self) -> f64 {
        ((self.inverse_distortion.value - self.inverse_distortion_expected) / self.inverse_distortion_expected).abs()
    }
}

/// Extrapolates both low-rate limits on `grid` (positive, decreasing).
pub fn verify_lowrate_additivity(source: &SourceModel, k: u32, grid: &[f64]) -> Result<AdditivityReport> {
    if k == 0 || k > MAX_ADDITIVITY_K {
        return Err(Error::Domain(format!("k = {k} outside 1..={MAX_ADDITIVITY_K}")));
    }
    if grid.len() < 2 || grid.iter().any(|g| !(*g > 0.0 && g.is_finite())) || grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("γ grid must hold at least two positive, strictly decreasing values".into()));
    }
    let var = source.variance();
    let mutual_info = try_limit_at_zero(|g| Ok::<_, Error>(mutual_info_bits(source, ChannelPoint::new(g, k)?)? / g), grid)?;
    // 1/mmse − 1/σ² = (σ² − mmse)/(mmse·σ²), with the numerator computed
    // directly to keep precision at small γ
    let inverse_distortion = try_limit_at_zero(
        |g| {
            let point = ChannelPoint::new(g, k)?;
            let explained = explained_variance(source, point)?.value;
            Ok::<_, Error>(explained / (mmse(source, point)? * var * g))
        },
        grid,
    )?;
    Ok(AdditivityReport {
        source: source.describe(),
        k,
        mutual_info,
        mutual_info_expected: k as f64 * 0.5 * std::f64::consts::LOG2_E * var,
        inverse_distortion,
        inverse_distortion_expected: k as f64,
    })
}
