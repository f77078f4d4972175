//! Small dense convex quadratic programs over the non-negative orthant.

/// Minimizes `½(x − x0)ᵀH(x − x0) − gᵀ(x − x0)` over `x ≥ 0` by a primal
/// active-set method started at the feasible point `x0 ≥ 0`.
///
/// `h` is symmetric positive semidefinite, stored by rows. Working in the step
/// `x − x0` keeps the solve error proportional to the step, which matters
/// when `g` is tiny near an optimum.
pub fn nonneg_quadratic(h: &[Vec<f64>], g: &[f64], x0: &[f64]) -> Vec<f64> {
    let k = g.len();
    let mut x = x0.to_vec();
    let mut free: Vec<bool> = x0.iter().map(|v| *v > 0.0).collect();
    let scale = (0..k).map(|j| h[j][j]).fold(0.0, f64::max);
    let ridge = 1e-14 * scale;
    let grad_tol = 1e-15 * (scale + g.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    for _ in 0..4 * k + 10 {
        // equality-constrained minimizer on the free set, variables outside held at 0
        loop {
            let idx: Vec<usize> = (0..k).filter(|&j| free[j]).collect();
            if idx.is_empty() {
                break;
            }
            let rhs: Vec<f64> = idx
                .iter()
                .map(|&i| g[i] + (0..k).filter(|&l| !free[l]).map(|l| h[i][l] * x0[l]).sum::<f64>())
                .collect();
            let sub: Vec<Vec<f64>> = idx.iter().map(|&i| idx.iter().map(|&l| h[i][l]).collect()).collect();
            let step = cholesky_solve(sub, rhs, ridge);
            let target: Vec<f64> = idx.iter().zip(&step).map(|(&i, s)| x0[i] + s).collect();
            if target.iter().all(|v| *v >= 0.0) {
                for (&i, t) in idx.iter().zip(&target) {
                    x[i] = *t;
                }
                (0..k).filter(|&j| !free[j]).for_each(|j| x[j] = 0.0);
                break;
            }
            let alpha = idx
                .iter()
                .zip(&target)
                .filter(|(_, t)| **t < 0.0)
                .map(|(&i, t)| x[i] / (x[i] - t))
                .fold(1.0, f64::min);
            for (&i, t) in idx.iter().zip(&target) {
                x[i] += alpha * (t - x[i]);
                if x[i] <= 0.0 || (*t < 0.0 && x[i] / (x[i] - t) <= alpha) {
                    x[i] = 0.0;
                    free[i] = false;
                }
            }
            (0..k).filter(|&j| !free[j]).for_each(|j| x[j] = 0.0);
        }
        // release the bound whose multiplier most favours increasing it
        let descent = |j: usize| g[j] - (0..k).map(|l| h[j][l] * (x[l] - x0[l])).sum::<f64>();
        let Some(t) = (0..k)
            .filter(|&j| !free[j])
            .map(|j| (j, descent(j)))
            .filter(|(_, d)| *d > grad_tol)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j)
        else {
            break;
        };
        free[t] = true;
    }
    x
}

fn cholesky_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, ridge: f64) -> Vec<f64> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[j][j] + ridge - (0..j).map(|l| a[j][l] * a[j][l]).sum::<f64>();
        if d <= 0.0 {
            d = ridge.max(f64::MIN_POSITIVE);
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let s = a[i][j] - (0..j).map(|l| a[i][l] * a[j][l]).sum::<f64>();
            a[i][j] = s / d;
        }
    }
    for i in 0..n {
        b[i] = (b[i] - (0..i).map(|l| a[i][l] * b[l]).sum::<f64>()) / a[i][i];
    }
    for i in (0..n).rev() {
        b[i] = (b[i] - (i + 1..n).map(|l| a[l][i] * b[l]).sum::<f64>()) / a[i][i];
    }
    b
}
