//! Numerical toolkit for sharp Trudinger–Moser suprema with radial power weights.
//!
//! Radial functions live on `(0, ∞)` with the measure `dλ_θ = ω_θ r^θ dr`.
//! In the Trudinger–Moser regime `α = p − 1` the crate evaluates the
//! subcritical supremum
//!
//! ```text
//! TMSC(μ) = sup_{‖u′‖_{L^p_α} ≤ 1} ‖u‖_{L^p_θ}^{-p} ∫ φ_p(μ|u|^{p/(p−1)}) dλ_θ
//! ```
//!
//! and the critical supremum `TMC(σ)` over the full-norm unit ball, by
//! certified lower bounds over discretized monotone profiles.
//!
//! Module map:
//! - [`measure`]: Gamma function, `ω_θ`, weighted quadrature and norms.
//! - [`profiles`]: grids, piecewise profiles, Moser/Ishiwata families, dilations.
//! - [`functionals`]: `φ_p` and the Trudinger–Moser functionals.
//! - [`optimize`]: maximization of `TMSC`/`TMC`, the identity engine, sweeps.
//! - [`verify`]: runnable property checks and a coverage manifest.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod error;
pub mod functionals;
pub mod measure;
pub mod optimize;
pub mod profiles;
pub mod verify;

pub use error::{Error, Result};
pub use functionals::{FunctionalReport, TmValue};
pub use optimize::{OptimizerConfig, SupremumEstimate};
pub use measure::{QuadratureRule, WeightParams};

pub use profiles::{Interpolation, RadialGrid, RadialProfile, TestFamilySpec};
