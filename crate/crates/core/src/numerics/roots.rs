use crate::error::{Error, Result};

/// Iteration cap for [`solve_monotone`].
pub const MAX_ITERATIONS: usize = 200;

/// Finds `x` in `[lo, hi]` with `|g(x) - target| <= tol` for a strictly
/// monotone `g`.
///
/// Bisection safeguarded secant steps (Illinois variant): a secant step is
/// taken when it lands strictly inside the current bracket, otherwise the
/// bracket is halved.
pub fn solve_monotone<G: Fn(f64) -> f64>(g: G, target: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    solve_monotone_with(|x| Ok(g(x)), target, lo, hi, tol)
}

/// [`solve_monotone`] for fallible functions.
pub fn solve_monotone_with<G: Fn(f64) -> Result<f64>>(g: G, target: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty bracket [{lo}, {hi}]")));
    }
    let g_lo = g(lo)?;
    let g_hi = g(hi)?;
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (g_lo - target, g_hi - target);
    if fa.abs() <= tol {
        return Ok(a);
    }
    if fb.abs() <= tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            lo,
            hi,
            g_lo,
            g_hi,
            target,
        });
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    // which endpoint was retained on the last step (Illinois weighting)
    let mut side = 0i8;
    for _ in 0..MAX_ITERATIONS {
        let secant = (a * fb - b * fa) / (fb - fa);
        let width = b - a;
        let x = if secant.is_finite() && secant > a + 1e-3 * width && secant < b - 1e-3 * width {
            secant
        } else {
            0.5 * (a + b)
        };
        let fx = g(x)? - target;
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a <= 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
    }
    Err(Error::NoConvergence {
        method: "solve_monotone",
        iterations: MAX_ITERATIONS,
        last: best.0,
        gap: best.1.abs(),
    })
}
