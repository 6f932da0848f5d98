//! Model parameter types, validation, and serialization.
//!
//! The model is the Heston variance process modulated by a fast
//! Ornstein-Uhlenbeck volatility factor:
//!
//! ```text
//! dX = (r - f(Y)^2 Z / 2) dt + sqrt(Z) f(Y) dW_x
//! dY = (Z/eps)(m - Y) dt + nu sqrt(2) sqrt(Z/eps) dW_y
//! dZ = kappa (theta - Z) dt + sigma sqrt(Z) dW_z
//! ```
//!
//! with pairwise Brownian correlations `rho_xy`, `rho_xz`, `rho_yz` and a
//! volatility function `f` normalized so that `<f^2> = 1` under the OU
//! invariant distribution N(m, nu^2).

use crate::error::{Error, Result};
use crate::quad::gaussian_average;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default Gauss-Hermite node count for invariant-distribution averages.
pub const DEFAULT_GH_NODES: usize = 128;

/// Slow-factor (CIR variance) model parameters plus the risk-free rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    /// Mean-reversion rate of variance (kappa > 0).
    pub kappa: f64,
    /// Long-run variance level (theta > 0).
    pub theta: f64,
    /// Vol-of-vol (sigma > 0).
    pub sigma: f64,
    /// Spot-variance correlation, |rho_xz| < 1.
    pub rho_xz: f64,
    /// Risk-free rate.
    pub r: f64,
    /// Whether 2 kappa theta >= sigma^2. Recorded, not enforced; set by
    /// [`validate_heston`].
    #[serde(default)]
    pub feller_satisfied: bool,
}

impl HestonParams {
    pub fn new(kappa: f64, theta: f64, sigma: f64, rho_xz: f64, r: f64) -> Result<Self> {
        validate_heston(HestonParams {
            kappa,
            theta,
            sigma,
            rho_xz,
            r,
            feller_satisfied: false,
        })
    }
}

/// Validate Heston parameters and record the Feller indicator.
pub fn validate_heston(mut p: HestonParams) -> Result<HestonParams> {
    fn positive(field: &'static str, v: f64) -> Result<()> {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                field,
                message: format!("must be positive and finite, got {v}"),
            })
        }
    }
    positive("kappa", p.kappa)?;
    positive("theta", p.theta)?;
    positive("sigma", p.sigma)?;
    if !(p.rho_xz.is_finite() && p.rho_xz * p.rho_xz < 1.0) {
        return Err(Error::InvalidParameter {
            field: "rho_xz",
            message: format!("must satisfy rho^2 < 1, got {}", p.rho_xz),
        });
    }
    if !p.r.is_finite() {
        return Err(Error::InvalidParameter {
            field: "r",
            message: "must be finite".into(),
        });
    }
    p.feller_satisfied = 2.0 * p.kappa * p.theta >= p.sigma * p.sigma;
    Ok(p)
}

/// Volatility function selector. Both variants are already normalized so
/// that `<f^2> = 1` under N(m, nu^2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolFn {
    /// f(y) = 1; reduces the model to pure Heston.
    Constant,
    /// f(y) = exp(y - m - nu^2); exponential-OU with closed-form moments.
    ExpOu,
}

/// Un-normalized volatility function, input to [`normalize_f`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawVolFn {
    /// f(y) = c for a positive constant c.
    Constant(f64),
    /// f(y) = e^y.
    Exp,
}

/// Fast OU volatility factor: OU parameters, time-scale, volatility
/// function, and its correlations with the other Brownians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastFactorSpec {
    /// OU mean level.
    pub m: f64,
    /// OU stationary standard deviation (nu > 0).
    pub nu: f64,
    /// Time-scale parameter (epsilon > 0, small).
    pub epsilon: f64,
    /// Normalized volatility function.
    pub f_spec: VolFn,
    /// Spot-fast-factor correlation, |rho_xy| < 1.
    pub rho_xy: f64,
    /// Fast-factor-variance correlation, |rho_yz| < 1.
    pub rho_yz: f64,
}

impl FastFactorSpec {
    /// Evaluate the normalized volatility function at y.
    pub fn f(&self, y: f64) -> f64 {
        match self.f_spec {
            VolFn::Constant => 1.0,
            VolFn::ExpOu => (y - self.m - self.nu * self.nu).exp(),
        }
    }

    /// `<f>` under the invariant distribution, by quadrature (exact for
    /// constant f).
    pub fn f_bar(&self, gh_nodes: usize) -> f64 {
        match self.f_spec {
            VolFn::Constant => 1.0,
            VolFn::ExpOu => gaussian_average(|y| self.f(y), self.m, self.nu, gh_nodes),
        }
    }

    /// Basic field validation (positivity and correlation magnitudes).
    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::InvalidParameter {
                field: "nu",
                message: format!("must be positive, got {}", self.nu),
            });
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter {
                field: "epsilon",
                message: format!("must be positive, got {}", self.epsilon),
            });
        }
        for (field, v) in [("rho_xy", self.rho_xy), ("rho_yz", self.rho_yz)] {
            if !(v.is_finite() && v * v < 1.0) {
                return Err(Error::InvalidParameter {
                    field,
                    message: format!("must satisfy rho^2 < 1, got {v}"),
                });
            }
        }
        if !self.m.is_finite() {
            return Err(Error::InvalidParameter {
                field: "m",
                message: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Normalize a raw volatility function to `<f^2> = 1` and wrap it in a
/// validated [`FastFactorSpec`].
///
/// The quadrature estimate of `<f^2>` for the stored (normalized) form must
/// lie within 1e-10 of one, otherwise `NormalizationFailed`.
pub fn normalize_f(
    raw: RawVolFn,
    m: f64,
    nu: f64,
    epsilon: f64,
    rho_xy: f64,
    rho_yz: f64,
) -> Result<FastFactorSpec> {
    let f_spec = match raw {
        RawVolFn::Constant(c) => {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidParameter {
                    field: "f_spec",
                    message: format!("constant f must be positive, got {c}"),
                });
            }
            VolFn::Constant
        }
        RawVolFn::Exp => VolFn::ExpOu,
    };
    let spec = FastFactorSpec {
        m,
        nu,
        epsilon,
        f_spec,
        rho_xy,
        rho_yz,
    };
    spec.validate()?;
    let f2 = gaussian_average(|y| spec.f(y) * spec.f(y), m, nu, DEFAULT_GH_NODES);
    let defect = (f2 - 1.0).abs();
    if !(defect < 1e-10) {
        return Err(Error::NormalizationFailed { defect });
    }
    Ok(spec)
}

/// Validated 3x3 Brownian correlation structure with its Cholesky factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub rho_xy: f64,
    pub rho_xz: f64,
    pub rho_yz: f64,
    /// Lower-triangular factor, row-major (l11, l21, l22, l31, l32, l33),
    /// for the Brownian ordering (W_x, W_y, W_z).
    pub chol: [f64; 6],
}

/// Validate pairwise correlations and factor the 3x3 correlation matrix.
///
/// Positive definiteness requires each |rho| < 1 and
/// `rho_xy^2 + rho_xz^2 + rho_yz^2 - 2 rho_xy rho_xz rho_yz < 1`.
pub fn validate_correlations(rho_xy: f64, rho_xz: f64, rho_yz: f64) -> Result<CorrelationMatrix> {
    for (name, v) in [("rho_xy", rho_xy), ("rho_xz", rho_xz), ("rho_yz", rho_yz)] {
        if !(v.is_finite() && v * v < 1.0) {
            return Err(Error::CorrelationNotPD(format!("|{name}| >= 1 ({v})")));
        }
    }
    let q = rho_xy * rho_xy + rho_xz * rho_xz + rho_yz * rho_yz - 2.0 * rho_xy * rho_xz * rho_yz;
    if !(q < 1.0) {
        return Err(Error::CorrelationNotPD(format!(
            "determinant condition violated: sum of squares minus cross term = {q} >= 1"
        )));
    }
    let l11 = 1.0;
    let l21 = rho_xy;
    let l22 = (1.0 - rho_xy * rho_xy).sqrt();
    let l31 = rho_xz;
    let l32 = (rho_yz - rho_xy * rho_xz) / l22;
    let l33 = (1.0 - l31 * l31 - l32 * l32).sqrt();
    if !l33.is_finite() || l33 <= 0.0 {
        return Err(Error::CorrelationNotPD("Cholesky pivot not positive".into()));
    }
    Ok(CorrelationMatrix {
        rho_xy,
        rho_xz,
        rho_yz,
        chol: [l11, l21, l22, l31, l32, l33],
    })
}

impl CorrelationMatrix {
    /// Correlate three iid standard normals: returns L * xi.
    #[inline]
    pub fn correlate(&self, xi: [f64; 3]) -> [f64; 3] {
        let [l11, l21, l22, l31, l32, l33] = self.chol;
        [
            l11 * xi[0],
            l21 * xi[0] + l22 * xi[1],
            l31 * xi[0] + l32 * xi[1] + l33 * xi[2],
        ]
    }

    /// Max-norm error of the reconstruction chol * chol^T vs the matrix.
    pub fn reconstruction_error(&self) -> f64 {
        let [l11, l21, l22, l31, l32, l33] = self.chol;
        let rows = [[l11, 0.0, 0.0], [l21, l22, 0.0], [l31, l32, l33]];
        let target = [
            [1.0, self.rho_xy, self.rho_xz],
            [self.rho_xy, 1.0, self.rho_yz],
            [self.rho_xz, self.rho_yz, 1.0],
        ];
        let mut err = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                for k in 0..3 {
                    v += rows[i][k] * rows[j][k];
                }
                err = err.max((v - target[i][j]).abs());
            }
        }
        err
    }
}

/// The four correction coefficients and the effective correlation of the
/// averaged Heston operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    /// Effective correlation rho = rho_xz * <f>.
    pub rho_eff: f64,
    /// <f> under the invariant distribution.
    pub f_bar: f64,
}

impl GroupParams {
    /// Zero correction with a given effective correlation (pure Heston).
    pub fn zero(rho_eff: f64) -> Self {
        GroupParams {
            v1: 0.0,
            v2: 0.0,
            v3: 0.0,
            v4: 0.0,
            rho_eff,
            f_bar: 1.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v1 == 0.0 && self.v2 == 0.0 && self.v3 == 0.0 && self.v4 == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("v1", self.v1),
            ("v2", self.v2),
            ("v3", self.v3),
            ("v4", self.v4),
            ("f_bar", self.f_bar),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    message: "must be finite".into(),
                });
            }
        }
        if !(self.rho_eff.is_finite() && self.rho_eff * self.rho_eff < 1.0) {
            return Err(Error::InvalidParameter {
                field: "rho_eff",
                message: format!("must satisfy rho^2 < 1, got {}", self.rho_eff),
            });
        }
        Ok(())
    }
}

/// A point at which the characteristic function is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    /// Time to maturity T - t (>= 0).
    pub tau: f64,
    /// Log spot.
    pub x: f64,
    /// Instantaneous variance (> 0).
    pub z: f64,
    /// Fourier argument; real for CF evaluation, -i for the martingale check.
    pub s: Complex64,
}

impl EvalPoint {
    pub fn new(tau: f64, x: f64, z: f64, s: Complex64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter {
                field: "tau",
                message: format!("must be >= 0, got {tau}"),
            });
        }
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::InvalidParameter {
                field: "z",
                message: format!("must be > 0, got {z}"),
            });
        }
        Ok(EvalPoint { tau, x, z, s })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn correlations_uncorrelated_is_identity() {
        let c = validate_correlations(0.0, 0.0, 0.0).unwrap();
        assert_eq!(c.chol, [1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn correlations_high_but_valid() {
        // 3 * 0.81 - 2 * 0.729 = 0.972 < 1
        let c = validate_correlations(0.9, 0.9, 0.9).unwrap();
        assert!(c.reconstruction_error() < 1e-12);
    }

    #[test]
    fn correlations_rejects_indefinite() {
        // 1.92 + 1.024 = 2.944 >= 1
        let e = validate_correlations(0.8, 0.8, -0.8).unwrap_err();
        assert!(matches!(e, Error::CorrelationNotPD(_)));
    }

    #[test]
    fn heston_feller_flag() {
        let p = HestonParams::new(1.15, 0.04, 0.2, -0.5, 0.02).unwrap();
        assert!(p.feller_satisfied); // 0.092 >= 0.04
        let p = HestonParams::new(0.5, 0.02, 0.5, -0.5, 0.02).unwrap();
        assert!(!p.feller_satisfied); // 0.02 < 0.25
    }

    #[test]
    fn heston_rejects_degenerate() {
        assert!(matches!(
            HestonParams::new(1.0, 0.04, 0.0, 0.0, 0.0),
            Err(Error::InvalidParameter { field: "sigma", .. })
        ));
        assert!(matches!(
            HestonParams::new(1.0, -0.1, 0.2, 0.0, 0.0),
            Err(Error::InvalidParameter { field: "theta", .. })
        ));
    }

    #[test]
    fn normalize_constant() {
        let spec = normalize_f(RawVolFn::Constant(3.7), 0.0, 0.5, 0.01, 0.0, 0.0).unwrap();
        assert_eq!(spec.f_spec, VolFn::Constant);
        assert_eq!(spec.f(1.23), 1.0);
    }

    #[test]
    fn normalize_exponential_moments() {
        // <e^{ay}> = e^{am + a^2 nu^2/2} gives <f> = e^{-nu^2/2} for the
        // normalized exponential f.
        let (m, nu) = (0.0, 0.5);
        let spec = normalize_f(RawVolFn::Exp, m, nu, 0.01, 0.0, 0.0).unwrap();
        let fbar = spec.f_bar(DEFAULT_GH_NODES);
        let exact = (-nu * nu / 2.0).exp();
        assert!((fbar - exact).abs() < 1e-12, "fbar={fbar}");
        assert!((fbar - 0.88250).abs() < 1e-5);
        // <f^2> = 1 within 1e-10 is the normalize_f contract itself.
        let f2 = gaussian_average(|y| spec.f(y) * spec.f(y), m, nu, DEFAULT_GH_NODES);
        assert!((f2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn serde_round_trip() {
        let p = HestonParams::new(1.15, 0.04, 0.2, -0.5, 0.02).unwrap();
        let back: HestonParams =
            serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, back);

        let spec = normalize_f(RawVolFn::Exp, 0.1, 0.4, 0.05, -0.3, 0.4).unwrap();
        let back: FastFactorSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, back);

        let c = validate_correlations(-0.3, -0.6, 0.4).unwrap();
        let back: CorrelationMatrix =
            serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }

    proptest! {
        #[test]
        fn cholesky_reconstructs(rho_xy in -0.95f64..0.95, rho_xz in -0.95f64..0.95,
                                 rho_yz in -0.95f64..0.95) {
            if let Ok(c) = validate_correlations(rho_xy, rho_xz, rho_yz) {
                prop_assert!(c.reconstruction_error() < 1e-12);
            }
        }

        #[test]
        fn normalized_f_second_moment(m in -1.0f64..1.0, nu in 0.05f64..1.0) {
            let spec = normalize_f(RawVolFn::Exp, m, nu, 0.01, 0.0, 0.0).unwrap();
            let f2 = gaussian_average(|y| spec.f(y) * spec.f(y), m, nu, DEFAULT_GH_NODES);
            prop_assert!((f2 - 1.0).abs() < 1e-10);
        }
    }
}
