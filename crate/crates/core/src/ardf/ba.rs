//! Blahut-Arimoto rate-distortion oracle for finite-alphabet sources under
//! squared error, with the reproduction alphabet equal to the source alphabet.

use std::f64::consts::LOG2_E;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{nonneg_quadratic, Pchip};
use crate::source::{Atom, SourceModel};

/// Largest alphabet the oracle accepts.
pub const MAX_ALPHABET: usize = 2048;
/// Default number of discretization levels for continuous sources.
pub const DEFAULT_LEVELS: usize = 401;
/// Discretization half-width in units of the widest component's std.
pub const DEFAULT_WINDOW_STDS: f64 = 6.0;
// reproduction weights below this are treated as dead
const WEIGHT_FLOOR: f64 = 1e-280;
// EM iterations before switching to Newton steps on the support
const EM_BUDGET: usize = 200;
// Newton steps without a representable objective change before the floor applies
const STALL_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaOptions {
    /// Stop when the upper and lower rate bounds are this close (bits).
    pub tol_bits: f64,
    /// Accepted gap once the objective stops changing in double precision.
    /// The bound is a maximum over atoms, so atoms of negligible probability
    /// can hold it above `tol_bits` after the rate itself has converged.
    pub floor_bits: f64,
    pub max_iterations: usize,
}

impl Default for BaOptions {
    fn default() -> Self {
        Self {
            tol_bits: 1e-9,
            floor_bits: 1e-4,
            max_iterations: 100_000,
        }
    }
}

/// One parametric point of the rate-distortion curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaPoint {
    /// Lagrange slope `s < 0` (nats per unit distortion).
    pub slope: f64,
    pub distortion: f64,
    pub rate_bits: f64,
    pub iterations: usize,
    /// Final gap between the upper and lower rate bounds, bits.
    pub gap_bits: f64,
}

fn check_alphabet(atoms: &[Atom]) -> Result<()> {
    if atoms.is_empty() || atoms.len() > MAX_ALPHABET {
        return Err(Error::Domain(format!(
            "Blahut-Arimoto alphabet size {} outside 1..={MAX_ALPHABET}",
            atoms.len()
        )));
    }
    Ok(())
}

/// Runs the alternating minimization at slope `s < 0`.
pub fn blahut_arimoto(atoms: &[Atom], slope: f64, opts: &BaOptions) -> Result<BaPoint> {
    check_alphabet(atoms)?;
    if !(slope < 0.0 && slope.is_finite()) {
        return Err(Error::Domain(format!("slope parameter must be negative and finite, got {slope}")));
    }
    let n = atoms.len();
    let p: Vec<f64> = atoms.iter().map(|a| a.p).collect();
    let x: Vec<f64> = atoms.iter().map(|a| a.x).collect();
    // a[i*n + j] = exp(s·(x_i − x_j)²)
    let a: Vec<f64> = (0..n * n)
        .map(|ij| {
            let d = x[ij / n] - x[ij % n];
            (slope * d * d).exp()
        })
        .collect();
    // The q-update maximizes Σ pᵢ ln zᵢ(q). EM steps with squared
    // extrapolation are fast while the reproduction support is wide; once it
    // collapses to a few atoms EM crawls, and a constrained Newton step on the
    // support (with gradient-maximum insertion) takes over.
    let mut q: Vec<f64> = p.clone();
    let mut state = evaluate(&a, &p, &q);
    let mut iterations = 0;
    let em_budget = EM_BUDGET.min(opts.max_iterations);
    while state.gap > opts.tol_bits && iterations < em_budget {
        let q1 = em_update(&q, &state.c);
        let s1 = evaluate(&a, &p, &q1);
        iterations += 1;
        if s1.gap <= opts.tol_bits {
            (q, state) = (q1, s1);
            break;
        }
        let q2 = em_update(&q1, &s1.c);
        let s2 = evaluate(&a, &p, &q2);
        iterations += 1;
        let r: Vec<f64> = q1.iter().zip(&q).map(|(b, a)| b - a).collect();
        let v: Vec<f64> = q2.iter().zip(&q1).zip(&r).map(|((c, b), r)| c - b - r).collect();
        let (rr, vv) = (norm2(&r), norm2(&v));
        let alpha = if vv > 0.0 { -(rr / vv).sqrt() } else { -1.0 };
        if alpha >= -1.0 {
            (q, state) = (q2, s2);
        } else {
            (q, state) = extrapolate(&a, &p, &q, &r, &v, alpha, q2, s2);
            iterations += 1;
        }
    }
    if state.gap > opts.tol_bits && iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        // drop only atoms EM is already shrinking; small atoms with c ≥ 1
        // are still being filled in and carry the tails of zᵢ
        let cut = 1e-8 * q.iter().cloned().fold(0.0, f64::max);
        for (qj, cj) in q.iter_mut().zip(&state.c) {
            if *qj < cut && *cj < 1.0 {
                *qj = 0.0;
            }
        }
        let total: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= total);
        state = evaluate(&a, &p, &q);
        let mut stalled = 0;
        while state.gap > opts.tol_bits && iterations < opts.max_iterations {
            let before = state.objective;
            (q, state) = newton_step(&a, &p, &order, q, state);
            iterations += 1;
            stalled = if state.objective - before <= 4.0 * f64::EPSILON * before.abs() { stalled + 1 } else { 0 };
            if stalled >= STALL_STEPS && state.gap <= opts.floor_bits {
                break;
            }
        }
    }
    if state.gap > opts.tol_bits.max(opts.floor_bits) {
        return Err(Error::NoConvergence {
            method: "Blahut-Arimoto",
            iterations,
            last: rate_distortion(&a, &x, &p, &q, &state.z, &state.c, slope).1 * LOG2_E,
            gap: state.gap,
        });
    }
    let gap = state.gap;
    let (distortion, rate) = rate_distortion(&a, &x, &p, &q, &state.z, &state.c, slope);
    Ok(BaPoint {
        slope,
        distortion,
        rate_bits: rate.max(0.0) * LOG2_E,
        iterations,
        gap_bits: gap,
    })
}

// Squared extrapolation x − 2αr + α²v, stabilized by one EM step and kept
// only if it does not decrease the objective below the plain double step.
#[allow(clippy::too_many_arguments)]
fn extrapolate(a: &[f64], p: &[f64], q: &[f64], r: &[f64], v: &[f64], alpha: f64, q2: Vec<f64>, s2: BaState) -> (Vec<f64>, BaState) {
    let mut qx: Vec<f64> = (0..q.len())
        .map(|j| (q[j] - 2.0 * alpha * r[j] + alpha * alpha * v[j]).max(1e-2 * q2[j]))
        .collect();
    let total: f64 = qx.iter().sum();
    qx.iter_mut().for_each(|w| *w /= total);
    let sx = evaluate(a, p, &qx);
    let qs = em_update(&qx, &sx.c);
    let ss = evaluate(a, p, &qs);
    if ss.objective.is_finite() && ss.objective >= s2.objective - 1e-14 * s2.objective.abs() {
        (qs, ss)
    } else {
        (q2, s2)
    }
}

// Zeroes weights below `rel`·max and renormalizes.
fn prune(q: &mut [f64], rel: f64) {
    let cut = rel * q.iter().cloned().fold(0.0, f64::max);
    q.iter_mut().filter(|v| **v < cut).for_each(|v| *v = 0.0);
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= total);
}

// One constrained Newton step on the Lagrangian Σ pᵢ ln zᵢ − Σ q_j: the
// support gains the local maxima of c (in x order) above 1, the quadratic
// model ½‖u − 1‖²_p − (c − 1)·δ + ½(Σδ)² with uᵢ = Σ_j a_ij q'_j/zᵢ is
// minimized over q' ≥ 0, and an Armijo search runs along q' − q. Falls back
// to an EM step if no ascent is found.
fn newton_step(a: &[f64], p: &[f64], order: &[usize], q: Vec<f64>, state: BaState) -> (Vec<f64>, BaState) {
    let n = p.len();
    let c = &state.c;
    let mut support: Vec<usize> = (0..n).filter(|&j| q[j] > 0.0).collect();
    for (k, &j) in order.iter().enumerate() {
        let left = k.checked_sub(1).map_or(f64::NEG_INFINITY, |l| c[order[l]]);
        let right = order.get(k + 1).map_or(f64::NEG_INFINITY, |&r| c[r]);
        if q[j] == 0.0 && c[j] > 1.0 && c[j] >= left && c[j] >= right {
            support.push(j);
        }
    }
    let rows: Vec<usize> = (0..n).filter(|&i| p[i] > 0.0 && state.z[i] > 0.0).collect();
    let cols: Vec<Vec<f64>> = support
        .iter()
        .map(|&j| rows.iter().map(|&i| p[i].sqrt() * a[i * n + j] / state.z[i]).collect())
        .collect();
    let h: Vec<Vec<f64>> = cols
        .iter()
        .map(|ci| cols.iter().map(|cl| ci.iter().zip(cl).map(|(x, y)| x * y).sum::<f64>() + 1.0).collect())
        .collect();
    let g: Vec<f64> = support.iter().map(|&j| c[j] - 1.0).collect();
    let x0: Vec<f64> = support.iter().map(|&j| q[j]).collect();
    let x = nonneg_quadratic(&h, &g, &x0);
    let total: f64 = x.iter().sum();
    if total > 0.0 && total.is_finite() {
        let mut target = vec![0.0; n];
        for (&j, v) in support.iter().zip(&x) {
            target[j] = v / total;
        }
        let ascent: f64 = target.iter().zip(c).map(|(t, cj)| t * cj).sum::<f64>() - 1.0;
        let slack = 4.0 * f64::EPSILON * state.objective.abs();
        let mut step = 1.0;
        for _ in 0..40 {
            let mut cand: Vec<f64> = q.iter().zip(&target).map(|(a, b)| a + step * (b - a)).collect();
            prune(&mut cand, 1e-14);
            let s = evaluate(a, p, &cand);
            if s.objective >= state.objective + step * ascent / 3.0 - slack && s.gap < 2.0 * state.gap.max(1e-300) {
                return (cand, s);
            }
            step *= 0.5;
        }
    }
    let q1 = em_update(&q, c);
    let s1 = evaluate(a, p, &q1);
    (q1, s1)
}

struct BaState {
    z: Vec<f64>,
    c: Vec<f64>,
    gap: f64,
    objective: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

// zᵢ = Σ_j q_j a_ij, c_j = Σ_i pᵢ a_ij / zᵢ, the rate-bound gap and Σ pᵢ ln zᵢ
fn evaluate(a: &[f64], p: &[f64], q: &[f64]) -> BaState {
    let n = p.len();
    let mut z = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut objective = 0.0;
    for i in 0..n {
        if p[i] == 0.0 {
            continue;
        }
        let row = &a[i * n..(i + 1) * n];
        z[i] = row.iter().zip(q).map(|(aij, qj)| aij * qj).sum();
        objective += p[i] * z[i].ln();
        let w = p[i] / z[i];
        for (cj, aij) in c.iter_mut().zip(row) {
            *cj += w * aij;
        }
    }
    let max_log = c.iter().map(|v| v.ln()).fold(f64::NEG_INFINITY, f64::max);
    let mean_log: f64 = q
        .iter()
        .zip(&c)
        .filter(|(qj, _)| **qj > 0.0)
        .map(|(qj, cj)| qj * cj * cj.ln())
        .sum();
    BaState {
        z,
        c,
        gap: ((max_log - mean_log) * LOG2_E).max(0.0),
        objective,
    }
}

fn em_update(q: &[f64], c: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = q
        .iter()
        .zip(c)
        .map(|(qj, cj)| {
            let w = qj * cj;
            if w < WEIGHT_FLOOR {
                0.0
            } else {
                w
            }
        })
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

// (D, R in nats) of the test channel Q(j|i) = q_j·a_ij / z_i
fn rate_distortion(a: &[f64], x: &[f64], p: &[f64], q: &[f64], z: &[f64], c: &[f64], slope: f64) -> (f64, f64) {
    let n = x.len();
    let mut d = 0.0;
    let mut log_z = 0.0;
    for i in 0..n {
        if p[i] == 0.0 {
            continue;
        }
        let row = &a[i * n..(i + 1) * n];
        let mut di = 0.0;
        for j in 0..n {
            let e = x[i] - x[j];
            di += q[j] * row[j] * e * e;
        }
        d += p[i] * di / z[i];
        log_z += p[i] * z[i].ln();
    }
    let out: f64 = q
        .iter()
        .zip(c)
        .filter(|(qj, _)| **qj > 0.0)
        .map(|(qj, cj)| qj * cj * cj.ln())
        .sum();
    (d, slope * d - log_z - out)
}

/// Parametric BA curve of a finite source, answered at arbitrary `D` by
/// monotone interpolation anchored at `(σ², 0)`.
#[derive(Debug, Clone)]
pub struct BaOracle {
    variance: f64,
    points: Vec<BaPoint>,
    interp: Pchip,
    max_gap_bits: f64,
}

impl BaOracle {
    /// Sweeps slopes `s = −1/(2·D_target)` over the given targets, in
    /// parallel.
    pub fn sweep(source: &SourceModel, targets: &[f64], opts: &BaOptions) -> Result<Self> {
        let atoms = source
            .atoms()
            .ok_or_else(|| Error::Unsupported("Blahut-Arimoto needs a finite discrete source; discretize first".into()))?;
        check_alphabet(atoms)?;
        let variance = source.variance();
        let points = targets
            .par_iter()
            .map(|&d| blahut_arimoto(atoms, -0.5 / d, opts))
            .collect::<Result<Vec<_>>>()?;
        let mut nodes: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.distortion < variance * (1.0 - 1e-9))
            .map(|p| (p.distortion, p.rate_bits))
            .collect();
        nodes.push((variance, 0.0));
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        nodes.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-12 * variance);
        if nodes.len() < 2 {
            return Err(Error::Domain("Blahut-Arimoto sweep produced no points below D_max".into()));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = nodes.into_iter().unzip();
        let interp = Pchip::new(xs, ys)?;
        let max_gap_bits = points.iter().map(|p| p.gap_bits).fold(0.0, f64::max);
        Ok(Self {
            variance,
            points,
            interp,
            max_gap_bits,
        })
    }

    /// Discretizes `source` (unless already finite) and sweeps a default set
    /// of slopes covering `[0.005σ², 0.9995σ²]`.
    pub fn for_source(source: &SourceModel, levels: usize, opts: &BaOptions) -> Result<Self> {
        let finite = discretize_for_oracle(source, levels)?;
        let var = finite.variance();
        let targets = default_targets(var);
        Self::sweep(&finite, &targets, opts)
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn points(&self) -> &[BaPoint] {
        &self.points
    }

    pub fn max_gap_bits(&self) -> f64 {
        self.max_gap_bits
    }

    /// Rate in bits at distortion `d`.
    pub fn rate_at(&self, d: f64) -> Result<f64> {
        if d >= self.variance {
            return Ok(0.0);
        }
        if d < self.interp.lo() {
            return Err(Error::Domain(format!(
                "distortion {d} below the smallest swept distortion {}",
                self.interp.lo()
            )));
        }
        Ok(self.interp.eval(d).max(0.0))
    }
}

/// Default slope targets `D` (slope `−1/(2D)`): geometric in `D`, a dense
/// band just below `D_max`, and a geometric band above it.
pub fn default_targets(var: f64) -> Vec<f64> {
    let mut t = crate::numerics::geometric_grid(0.005 * var, 0.9 * var, 40);
    t.extend((1..=12).map(|i| var * (1.0 - 0.1 * 0.5f64.powi(i))));
    // shallower slopes reach the part of the curve near D_max of sources
    // whose curve leaves (σ², 0) with slope above −1/(2σ²)
    t.extend(crate::numerics::geometric_grid(1.05 * var, 10.0 * var, 16));
    t
}

/// `levels`-point discretization on `mean ± 6·σ_max` (continuous sources),
/// or the source itself when it is already finite.
pub fn discretize_for_oracle(source: &SourceModel, levels: usize) -> Result<SourceModel> {
    if source.atoms().is_some() {
        return Ok(source.clone());
    }
    let (lo, hi) = match source.components() {
        Some(cs) => {
            let width = cs.iter().map(|c| c.var.sqrt()).fold(0.0, f64::max) * DEFAULT_WINDOW_STDS;
            let mu = source.mean();
            (mu - width, mu + width)
        }
        None => source.support(),
    };
    source.discretize(levels, lo, hi)
}
