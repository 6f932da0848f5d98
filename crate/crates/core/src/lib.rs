//! Heston characteristic function with a fast mean-reverting volatility
//! correction.
//!
//! The model augments the Heston variance process with a fast
//! Ornstein-Uhlenbeck volatility factor. A singular perturbation in the
//! time-scale parameter eps yields the characteristic function of log-price
//! as a leading Heston-type term `psi0` (with effective correlation
//! `rho_xz <f>`) plus a first-order correction `sqrt(eps) psi1` driven by
//! four group parameters V1..V4.
//!
//! Modules:
//! * [`params`] — model parameter types, validation, serialization
//! * [`heston_cf`] — leading-order characteristic function (stable Riccati form)
//! * [`correction_cf`] — first-order correction, dual-route, PDE residuals
//! * [`group_params`] — V1..V4 from an explicit volatility function
//! * [`mc_engine`] — full-model Monte Carlo oracle
//! * [`pricer`] — Fourier inversion pricing and implied volatility
//! * [`cli`] — configuration and command implementations

pub mod cli;
pub mod correction_cf;
pub mod error;
pub mod group_params;
pub mod heston_cf;
pub mod mc_engine;
pub mod params;
pub mod pricer;
pub mod quad;

pub use error::{Error, Result};
