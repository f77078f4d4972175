//! Numerical laboratory for the additive rate-distortion function (ARDF) of
//! scalar sources under a Gaussian test channel and mean-squared error.
//!
//! The channel is `Y = √γ·X + N` with `N ~ N(0, 1)`; `k` independent looks
//! at the same `X` are equivalent to one look at SNR `k·γ`. On top of it the
//! crate provides:
//!
//! - [`estimation`]: posterior mean, MMSE, linear MMSE, side information and
//!   the Jensen-gap linearity diagnostic;
//! - [`information`]: mutual information by two independent routes, the
//!   low-SNR series and conditional mutual information;
//! - [`ardf`]: parametric ARDF curves, the slope at zero rate, the
//!   conditional RDF of a two-component mixture and a Blahut-Arimoto oracle;
//! - [`refinement`]: bookkeeping for unconditional successive refinement;
//! - [`verify`]: self-contained checks producing pass/fail claim reports.

#![forbid(unsafe_code)]

pub mod ardf;
pub mod error;
pub mod estimation;
pub mod information;
pub mod numerics;
pub mod refinement;
pub mod source;
pub mod verify;

pub use error::{Error, Result};
pub use source::{Component, MixtureSpec, SideInfoModel, SourceKind, SourceModel};
