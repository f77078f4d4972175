//! Shared numeric kernels.

pub mod extrapolate;
pub mod interp;
pub mod montecarlo;
pub mod qp;
pub mod quadrature;
pub mod roots;

pub use extrapolate::{
    default_gamma_grid, derivative, geometric_grid, halving_steps, limit_at_zero, limit_from_samples, try_derivative,
    try_limit_at_zero,
    ExtrapolationStatus, LimitEstimate,
};
pub use interp::Pchip;
pub use qp::nonneg_quadratic;
pub use montecarlo::{derive_seed, mc_mean, McMean, DEFAULT_CONFIDENCE, DEFAULT_SAMPLES};
pub use quadrature::{integrate, integrate_line, QuadOptions, QuadratureResult, Support};
pub use roots::solve_monotone;
