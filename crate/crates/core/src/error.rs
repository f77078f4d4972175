use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or schedule violates one of its construction invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is not defined for this kind of source.
    #[error("unsupported source kind: {0}")]
    Unsupported(String),

    /// A moment of a heavy-tailed tabulated density does not exist.
    #[error("moment of order {order} diverges (tail exponent {tail_exponent})")]
    DivergentMoment { order: u32, tail_exponent: f64 },

    /// Adaptive quadrature ran out of its evaluation budget.
    #[error("quadrature did not converge: best estimate {estimate} with error {abs_error} after {evaluations} evaluations")]
    Quadrature {
        estimate: f64,
        abs_error: f64,
        evaluations: usize,
    },

    /// The root-finding bracket does not straddle the target.
    #[error("bracket [{lo}, {hi}] does not straddle target {target}: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        target: f64,
    },

    /// An iterative method stopped before meeting its tolerance.
    #[error("{method} did not converge after {iterations} iterations (last {last}, gap {gap})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        last: f64,
        gap: f64,
    },

    /// Two independent routes to the same quantity disagree.
    #[error("inconsistent estimates: {first} vs {second} (allowed {allowed})")]
    Inconsistent {
        first: f64,
        second: f64,
        allowed: f64,
    },

    #[error("source specification: {0}")]
    Spec(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
