use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::Pchip;

/// Density given on a grid, interpolated by a monotone cubic and truncated
/// hard at the first and last grid points.
///
/// `tail_exponent`, when set, declares that the true density decays like
/// `|x|^-α` beyond the grid. Moments of order `k >= α - 1` then do not exist
/// and are refused instead of being computed from the truncated table.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    interp: Pchip,
    norm: f64,
    tail_exponent: Option<f64>,
    // cumulative normalized mass at the right edge of each cell
    cumulative: Vec<f64>,
    raw: [f64; 5],
    central: [f64; 5],
    moment_error: [f64; 5],
}

impl TabulatedDensity {
    pub fn new(x: Vec<f64>, f: Vec<f64>, tail_exponent: Option<f64>) -> Result<Self> {
        if f.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidModel("tabulated density has negative values".into()));
        }
        if let Some(alpha) = tail_exponent {
            if !(alpha > 3.0) {
                return Err(Error::InvalidModel(format!(
                    "tail exponent {alpha} gives an infinite variance (need > 3)"
                )));
            }
        }
        let interp = Pchip::new(x, f)?;
        let nodes = interp.nodes().to_vec();
        let cells = nodes.len() - 1;

        // 4 points integrate cubic * x^4 exactly; 6 points give the error check
        let rules = [gauss_legendre(4), gauss_legendre(6)];
        let mut sums = [[0.0f64; 5]; 2];
        let mut abs_sums = [0.0f64; 5];
        let mut cell_mass = vec![0.0; cells];
        for i in 0..cells {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (r, (xs, ws)) in rules.iter().enumerate() {
                for (t, w) in xs.iter().zip(ws) {
                    let x = mid + half * t;
                    let fx = interp.eval_in_cell(i, x) * w * half;
                    let mut p = 1.0;
                    for k in 0..5 {
                        sums[r][k] += fx * p;
                        if r == 0 {
                            abs_sums[k] += (fx * p).abs();
                        }
                        p *= x;
                    }
                    if r == 0 {
                        cell_mass[i] += fx;
                    }
                }
            }
        }
        let norm = sums[0][0];
        if !(norm > 0.0) {
            return Err(Error::InvalidModel("tabulated density has zero mass".into()));
        }
        let mut raw = [1.0; 5];
        let mut moment_error = [0.0; 5];
        for k in 1..5 {
            raw[k] = sums[0][k] / norm;
            moment_error[k] = ((sums[0][k] - sums[1][k]).abs() + 64.0 * f64::EPSILON * abs_sums[k]) / norm;
        }
        let mean = raw[1];
        let mut central = [1.0, 0.0, 0.0, 0.0, 0.0];
        for i in 0..cells {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let (xs, ws) = &rules[0];
            for (t, w) in xs.iter().zip(ws) {
                let x = mid + half * t;
                let fx = interp.eval_in_cell(i, x) * w * half / norm;
                let d = x - mean;
                central[2] += fx * d * d;
                central[3] += fx * d * d * d;
                central[4] += fx * d * d * d * d;
            }
        }
        if !(central[2] > 0.0) {
            return Err(Error::InvalidModel("tabulated density is degenerate (zero variance)".into()));
        }
        let mut cumulative = Vec::with_capacity(cells);
        let mut acc = 0.0;
        for m in &cell_mass {
            acc += m / norm;
            cumulative.push(acc);
        }
        Ok(Self {
            interp,
            norm,
            tail_exponent,
            cumulative,
            raw,
            central,
            moment_error,
        })
    }

    /// Flat density on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidModel(format!("uniform support [{lo}, {hi}] is empty")));
        }
        Self::new(vec![lo, hi], vec![1.0, 1.0], None)
    }

    pub fn lo(&self) -> f64 {
        self.interp.lo()
    }

    pub fn hi(&self) -> f64 {
        self.interp.hi()
    }

    pub fn nodes(&self) -> &[f64] {
        self.interp.nodes()
    }

    pub fn tail_exponent(&self) -> Option<f64> {
        self.tail_exponent
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.lo() || x > self.hi() {
            0.0
        } else {
            self.interp.eval(x) / self.norm
        }
    }

    pub(crate) fn check_moment(&self, k: u32) -> Result<()> {
        match self.tail_exponent {
            Some(alpha) if k as f64 >= alpha - 1.0 => Err(Error::DivergentMoment {
                order: k,
                tail_exponent: alpha,
            }),
            _ => Ok(()),
        }
    }

    /// Raw moment and its absolute error bound.
    pub fn moment_with_error(&self, k: u32) -> Result<(f64, f64)> {
        self.check_moment(k)?;
        Ok((self.raw[k as usize], self.moment_error[k as usize]))
    }

    pub fn central_moment(&self, k: u32) -> Result<f64> {
        self.check_moment(k)?;
        Ok(self.central[k as usize])
    }

    pub fn mean(&self) -> f64 {
        self.raw[1]
    }

    pub fn variance(&self) -> f64 {
        self.central[2]
    }

    pub(crate) fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let cell = self.cumulative.partition_point(|&c| c < u).min(self.cumulative.len() - 1);
        let nodes = self.interp.nodes();
        let values = self.interp.values();
        let (a, b) = (nodes[cell], nodes[cell + 1]);
        let envelope = values[cell].max(values[cell + 1]);
        loop {
            let x = a + (b - a) * rng.random::<f64>();
            if rng.random::<f64>() * envelope <= self.interp.eval_in_cell(cell, x) {
                return x;
            }
        }
    }
}
