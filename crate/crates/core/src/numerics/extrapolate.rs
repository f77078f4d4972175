//! Richardson/Neville extrapolation: central-difference derivatives and
//! limits at zero sampled on a geometric grid.

use serde::Serialize;

/// Whether an extrapolation behaved as expected.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum ExtrapolationStatus {
    Converged,
    Warning(String),
}

impl ExtrapolationStatus {
    pub fn is_warning(&self) -> bool {
        matches!(self, Self::Warning(_))
    }
}

/// Extrapolated value together with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub extrapolation_order: usize,
    /// Difference between the selected extrapolant and its neighbours in the
    /// tableau; always reported.
    pub residual: f64,
    pub status: ExtrapolationStatus,
}

/// Geometric grid from `from` down to `to` with `points` entries.
pub fn geometric_grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && from > 0.0 && to > 0.0);
    let ratio = (to / from).powf(1.0 / (points - 1) as f64);
    (0..points).map(|i| from * ratio.powi(i as i32)).collect()
}

/// Default grid for limits at zero: 9 points from `1e-1` to `1e-5`.
pub fn default_gamma_grid() -> Vec<f64> {
    geometric_grid(1e-1, 1e-5, 9)
}

/// Halving step sequence `h0, h0/2, ..., h0/2^(n-1)`.
pub fn halving_steps(h0: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| h0 * 0.5f64.powi(i as i32)).collect()
}

/// Neville tableau for the polynomial extrapolation of `(t_i, v_i)` to
/// `t = 0`; row `i` holds extrapolants of orders `0..=i`.
fn neville_rows(t: &[f64], v: &[f64]) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let mut row = Vec::with_capacity(i + 1);
        row.push(v[i]);
        for j in 1..=i {
            let prev = &rows[i - 1];
            let num = row[j - 1] - prev[j - 1];
            row.push(row[j - 1] + num * t[i] / (t[i - j] - t[i]));
        }
        rows.push(row);
    }
    rows
}

/// Selects the tableau entry with the smallest error estimate (Ridders'
/// rule) and flags growth of the diagonal differences as noise.
fn select(rows: &[Vec<f64>]) -> LimitEstimate {
    let mut best = LimitEstimate {
        value: rows[0][0],
        extrapolation_order: 0,
        residual: f64::INFINITY,
        status: ExtrapolationStatus::Converged,
    };
    for i in 1..rows.len() {
        for j in 1..=i {
            let err = (rows[i][j] - rows[i][j - 1])
                .abs()
                .max((rows[i][j] - rows[i - 1][j - 1]).abs());
            if err <= best.residual {
                best.value = rows[i][j];
                best.extrapolation_order = j;
                best.residual = err;
            }
        }
    }
    if rows.len() == 1 {
        best.residual = 0.0;
        best.status = ExtrapolationStatus::Warning("single sample, no extrapolation".into());
        return best;
    }
    let diag: Vec<f64> = rows.iter().enumerate().map(|(i, r)| r[i]).collect();
    let diffs: Vec<f64> = diag.windows(2).map(|w| w[1] - w[0]).collect();
    let floor = 1e-10 * best.value.abs().max(1e-300) + 4.0 * best.residual;
    let significant: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() > floor).collect();
    if significant.windows(2).any(|w| w[0].signum() != w[1].signum()) {
        best.status = ExtrapolationStatus::Warning("non-monotone extrapolant sequence".into());
    }
    let last = diffs.last().map_or(0.0, |d| d.abs());
    if last > 2.0 * floor && last > 10.0 * best.residual {
        best.status = ExtrapolationStatus::Warning(format!(
            "extrapolants diverge at the finest samples (last difference {last:.3e}); samples below noise floor"
        ));
    }
    best
}

/// Richardson-extrapolated central difference of `f` at `x` using the
/// decreasing step sequence `steps`.
pub fn derivative<F: Fn(f64) -> f64>(f: F, x: f64, steps: &[f64]) -> LimitEstimate {
    assert!(!steps.is_empty(), "derivative needs at least one step");
    let t: Vec<f64> = steps.iter().map(|h| h * h).collect();
    let v: Vec<f64> = steps.iter().map(|&h| (f(x + h) - f(x - h)) / (2.0 * h)).collect();
    select(&neville_rows(&t, &v))
}

/// [`derivative`] for fallible functions.
pub fn try_derivative<E, F: Fn(f64) -> Result<f64, E>>(f: F, x: f64, steps: &[f64]) -> Result<LimitEstimate, E> {
    assert!(!steps.is_empty(), "derivative needs at least one step");
    let t: Vec<f64> = steps.iter().map(|h| h * h).collect();
    let mut v = Vec::with_capacity(steps.len());
    for &h in steps {
        v.push((f(x + h)? - f(x - h)?) / (2.0 * h));
    }
    Ok(select(&neville_rows(&t, &v)))
}

/// Polynomial extrapolation of `f(γ)` to `γ = 0` from samples on `grid`
/// (decreasing, geometric).
pub fn limit_at_zero<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> LimitEstimate {
    let values: Vec<f64> = grid.iter().map(|&g| f(g)).collect();
    limit_from_samples(grid, &values)
}

/// [`limit_at_zero`] for fallible functions.
pub fn try_limit_at_zero<E, F: Fn(f64) -> Result<f64, E>>(f: F, grid: &[f64]) -> Result<LimitEstimate, E> {
    let values = grid.iter().map(|&g| f(g)).collect::<Result<Vec<_>, E>>()?;
    Ok(limit_from_samples(grid, &values))
}

/// Extrapolates precomputed samples `values[i] = f(grid[i])` to zero.
pub fn limit_from_samples(grid: &[f64], values: &[f64]) -> LimitEstimate {
    assert_eq!(grid.len(), values.len());
    assert!(!grid.is_empty(), "limit needs at least one sample");
    select(&neville_rows(grid, values))
}
