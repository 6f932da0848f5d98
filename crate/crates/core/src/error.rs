//! Error type shared across the library.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter failed validation.
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: &'static str, message: String },

    /// The 3x3 Brownian correlation matrix is not positive definite.
    #[error("correlation matrix is not positive definite: {0}")]
    CorrelationNotPD(String),

    /// Normalization of the volatility function f did not reach <f^2> = 1.
    #[error("volatility function normalization failed: |<f^2> - 1| = {defect:e}")]
    NormalizationFailed { defect: f64 },

    /// Poisson-equation source is not centered against the invariant distribution.
    #[error("Poisson source not centered: |<source>| = {mean:e}")]
    SourceNotCentered { mean: f64 },

    /// Fixed-step ODE integration did not meet the error target.
    #[error("ODE step count too small: Richardson estimate {estimate:e} > {target:e}")]
    StepCountTooSmall { estimate: f64, target: f64 },

    /// An adaptive quadrature failed to converge.
    #[error("quadrature did not converge: last change {last_change:e}")]
    QuadratureNotConverged { last_change: f64 },

    /// An exponent left the representable range.
    #[error("numerical overflow: exponent real part {exponent}")]
    NumericalOverflow { exponent: f64 },

    /// A non-finite value appeared during simulation.
    #[error("invalid simulation state: {0}")]
    InvalidState(String),

    /// COS truncation interval too narrow (put-call parity self-check failed).
    #[error("COS truncation too narrow: parity defect {defect:e}")]
    TruncationTooNarrow { defect: f64 },

    /// Option price outside the no-arbitrage bounds.
    #[error("price {price} outside no-arbitrage bounds [{lower}, {upper}]")]
    OutOfBounds { price: f64, lower: f64, upper: f64 },

    /// Root finding did not converge.
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
