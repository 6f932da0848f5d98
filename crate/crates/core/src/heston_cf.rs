//! Leading-order characteristic function of the averaged Heston operator.
//!
//! The leading term is `psi0 = exp(C(tau) + z D(tau) + i s x)` where C and D
//! solve the usual complex Riccati system with the effective correlation
//! `rho = rho_xz <f>`. The coefficients are evaluated in the
//! exp(-d tau) ("little Heston trap") form, which is algebraically identical
//! to the textbook exp(+d tau) form but free of complex-log branch jumps at
//! long maturities.

use crate::error::{Error, Result};
use crate::params::{EvalPoint, HestonParams};
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Riccati solution at a given (tau, s).
#[derive(Debug, Clone, Copy)]
pub struct CfCoeffs {
    /// Exponent coefficient C(tau).
    pub c: Complex64,
    /// Coefficient D(tau) multiplying z.
    pub d_cap: Complex64,
    /// Discriminant d(s), branch with Re(d) >= 0.
    pub d_disc: Complex64,
    /// Stable branch ratio g~ = (kappa - i rho sigma s - d) / (kappa - i rho sigma s + d),
    /// the reciprocal of the classical g(s). Zero in the short-circuited
    /// degenerate cases s = 0 and s = -i.
    pub g_tilde: Complex64,
}

/// True when the Riccati source (s^2 + i s)/2 vanishes, i.e. s = 0 or s = -i.
/// In both cases D is identically zero and C reduces to i r s tau.
#[inline]
pub(crate) fn riccati_source_vanishes(s: Complex64) -> bool {
    s.re == 0.0 && (s.im == 0.0 || s.im == -1.0)
}

/// Discriminant d(s) = sqrt((rho sigma i s - kappa)^2 + sigma^2 (i s + s^2)),
/// branch with Re(d) >= 0 (ties broken toward Im(d) >= 0).
pub fn discriminant(s: Complex64, p: &HestonParams, rho_eff: f64) -> Complex64 {
    let beta = I * rho_eff * p.sigma * s - p.kappa;
    let mut d = (beta * beta + p.sigma * p.sigma * (I * s + s * s)).sqrt();
    if d.re < 0.0 || (d.re == 0.0 && d.im < 0.0) {
        d = -d;
    }
    d
}

/// Riccati coefficients C(tau), D(tau) in the stable exp(-d tau) form.
pub fn cd_coeffs(tau: f64, s: Complex64, p: &HestonParams, rho_eff: f64) -> Result<CfCoeffs> {
    let d = discriminant(s, p, rho_eff);
    if tau == 0.0 || riccati_source_vanishes(s) {
        // D solves a Riccati with zero source and zero initial condition,
        // so D = 0 and C = i r s tau.
        return Ok(CfCoeffs {
            c: I * p.r * s * tau,
            d_cap: Complex64::new(0.0, 0.0),
            d_disc: d,
            g_tilde: Complex64::new(0.0, 0.0),
        });
    }
    let beta = p.kappa - I * rho_eff * p.sigma * s;
    let sigma2 = p.sigma * p.sigma;
    let g_tilde = (beta - d) / (beta + d);
    let e = (-d * tau).exp();
    let one = Complex64::new(1.0, 0.0);
    let d_cap = (beta - d) / sigma2 * (one - e) / (one - g_tilde * e);
    // The log argument stays in the right half-plane for Re(d) > 0, so the
    // principal branch keeps C continuous in tau.
    let log_term = ((one - g_tilde * e) / (one - g_tilde)).ln();
    let c = I * p.r * s * tau + p.kappa * p.theta / sigma2 * ((beta - d) * tau - 2.0 * log_term);
    if !c.is_finite() || !d_cap.is_finite() {
        return Err(Error::NumericalOverflow {
            exponent: (d.re * tau).max(c.re),
        });
    }
    Ok(CfCoeffs {
        c,
        d_cap,
        d_disc: d,
        g_tilde,
    })
}

/// Leading-order characteristic function psi0 = exp(C + z D + i s x).
pub fn psi0(pt: &EvalPoint, p: &HestonParams, rho_eff: f64) -> Result<Complex64> {
    let cd = cd_coeffs(pt.tau, pt.s, p, rho_eff)?;
    let exponent = cd.c + pt.z * cd.d_cap + I * pt.s * pt.x;
    if exponent.re > 700.0 {
        return Err(Error::NumericalOverflow { exponent: exponent.re });
    }
    Ok(exponent.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::HestonParams;
    use proptest::prelude::*;

    fn params() -> HestonParams {
        HestonParams::new(1.15, 0.04, 0.2, -0.5, 0.02).unwrap()
    }

    /// Direct transcription of the exp(+d tau) closed form; only stable for
    /// short maturities, used to check algebraic equivalence.
    fn cd_naive(tau: f64, s: Complex64, p: &HestonParams, rho_eff: f64) -> (Complex64, Complex64) {
        let d = discriminant(s, p, rho_eff);
        let beta = p.kappa - I * rho_eff * p.sigma * s;
        let sigma2 = p.sigma * p.sigma;
        let g = (beta + d) / (beta - d);
        let one = Complex64::new(1.0, 0.0);
        let e = (d * tau).exp();
        let d_cap = (beta + d) / sigma2 * (one - e) / (one - g * e);
        let c = I * p.r * s * tau
            + p.kappa * p.theta / sigma2
                * ((beta + d) * tau - 2.0 * ((one - g * e) / (one - g)).ln());
        (c, d_cap)
    }

    #[test]
    fn discriminant_at_zero_is_kappa() {
        let p = params();
        let d = discriminant(Complex64::new(0.0, 0.0), &p, p.rho_xz);
        assert!((d - Complex64::new(p.kappa, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn discriminant_at_minus_i() {
        let p = params();
        let rho = -0.5;
        let d = discriminant(Complex64::new(0.0, -1.0), &p, rho);
        let expect = (p.kappa - rho * p.sigma).abs();
        assert!((d - Complex64::new(expect, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn discriminant_conjugate_symmetry() {
        let p = params();
        for k in 1..=20 {
            let s = Complex64::new(0.5 * k as f64, 0.0);
            let d1 = discriminant(-s, &p, p.rho_xz);
            let d2 = discriminant(s, &p, p.rho_xz).conj();
            assert!((d1 - d2).norm() < 1e-12);
        }
    }

    #[test]
    fn cd_terminal_condition() {
        let p = params();
        let cd = cd_coeffs(0.0, Complex64::new(2.0, 0.0), &p, p.rho_xz).unwrap();
        assert_eq!(cd.c, Complex64::new(0.0, 0.0));
        assert_eq!(cd.d_cap, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cd_zero_argument() {
        let p = params();
        let cd = cd_coeffs(5.0, Complex64::new(0.0, 0.0), &p, p.rho_xz).unwrap();
        assert_eq!(cd.c, Complex64::new(0.0, 0.0));
        assert_eq!(cd.d_cap, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cd_martingale_argument() {
        let p = params();
        let tau = 1.7;
        let cd = cd_coeffs(tau, Complex64::new(0.0, -1.0), &p, p.rho_xz).unwrap();
        assert_eq!(cd.d_cap, Complex64::new(0.0, 0.0));
        assert!((cd.c - Complex64::new(p.r * tau, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn psi0_boundary_and_martingale() {
        let p = params();
        let pt = EvalPoint::new(0.0, 0.3, 0.04, Complex64::new(2.0, 0.0)).unwrap();
        let v = psi0(&pt, &p, p.rho_xz).unwrap();
        assert!((v - (I * pt.s * pt.x).exp()).norm() < 1e-15);

        let pt = EvalPoint::new(1.0, 0.0, 0.04, Complex64::new(0.0, 0.0)).unwrap();
        assert!((psi0(&pt, &p, p.rho_xz).unwrap() - 1.0).norm() < 1e-15);

        // E[S_T] = S0 e^{r tau}
        let pt = EvalPoint::new(1.0, 0.0, 0.04, Complex64::new(0.0, -1.0)).unwrap();
        let v = psi0(&pt, &p, p.rho_xz).unwrap();
        assert!((v - Complex64::new(0.02f64.exp(), 0.0)).norm() < 1e-14);
        assert!((v.re - 1.02020).abs() < 1e-5);
    }

    #[test]
    fn stable_form_matches_naive_where_both_stable() {
        let p = params();
        for &tau in &[0.1, 0.5, 1.0] {
            for &sr in &[0.25, 0.5, 1.0, 2.0] {
                let s = Complex64::new(sr, 0.0);
                let cd = cd_coeffs(tau, s, &p, p.rho_xz).unwrap();
                let (c, d_cap) = cd_naive(tau, s, &p, p.rho_xz);
                assert!((cd.c - c).norm() < 1e-9, "tau={tau} s={sr}");
                assert!((cd.d_cap - d_cap).norm() < 1e-9, "tau={tau} s={sr}");
            }
        }
    }

    #[test]
    fn c_continuity_no_branch_jumps() {
        // Long maturity, strong vol-of-vol: the naive form jumps here.
        let p = HestonParams::new(1.15, 0.04, 0.6, -0.7, 0.02).unwrap();
        let tau = 10.0;
        let mut prev = cd_coeffs(tau, Complex64::new(1e-6, 0.0), &p, -0.7).unwrap().c;
        let mut s = 0.01;
        while s <= 50.0 {
            let c = cd_coeffs(tau, Complex64::new(s, 0.0), &p, -0.7).unwrap().c;
            assert!(
                (c.im - prev.im).abs() < 0.1,
                "branch jump at s={s}: {} -> {}",
                prev.im,
                c.im
            );
            prev = c;
            s += 0.01;
        }
    }

    #[test]
    fn riccati_ode_residual_finite_difference() {
        // Forward-tau Riccati system:
        //   dD/dtau = -(s^2 + is)/2 + sigma^2 D^2 / 2 - (kappa - i rho sigma s) D
        //   dC/dtau = i r s + kappa theta D
        // checked against O(h^2) central differences of the closed form.
        let p = params();
        let s = Complex64::new(1.5, 0.0);
        let rho = p.rho_xz;
        let h = 1e-4;
        for &tau in &[0.3, 1.0, 4.0] {
            let lo = cd_coeffs(tau - h, s, &p, rho).unwrap();
            let mid = cd_coeffs(tau, s, &p, rho).unwrap();
            let hi = cd_coeffs(tau + h, s, &p, rho).unwrap();
            let beta = p.kappa - I * rho * p.sigma * s;
            let d0 = mid.d_cap;
            let fd_d = (hi.d_cap - lo.d_cap) / (2.0 * h);
            let rhs_d = -0.5 * (s * s + I * s) + 0.5 * p.sigma * p.sigma * d0 * d0 - beta * d0;
            assert!((fd_d - rhs_d).norm() < 1e-6, "D residual at tau={tau}");
            let fd_c = (hi.c - lo.c) / (2.0 * h);
            let rhs_c = I * p.r * s + p.kappa * p.theta * d0;
            assert!((fd_c - rhs_c).norm() < 1e-6, "C residual at tau={tau}");
        }
    }

    proptest! {
        #[test]
        fn conjugate_symmetry_and_modulus(
            kappa in 0.5f64..3.0, theta in 0.01f64..0.09, sigma in 0.1f64..0.6,
            rho in -0.9f64..0.9, tau in 0.1f64..10.0, sr in 0.1f64..20.0,
            x in -0.5f64..0.5, z in 0.01f64..0.09,
        ) {
            let p = HestonParams::new(kappa, theta, sigma, rho, 0.02).unwrap();
            let s = Complex64::new(sr, 0.0);
            let a = psi0(&EvalPoint::new(tau, x, z, s).unwrap(), &p, rho).unwrap();
            let b = psi0(&EvalPoint::new(tau, x, z, -s).unwrap(), &p, rho).unwrap();
            prop_assert!((b - a.conj()).norm() < 1e-12);
            prop_assert!(a.norm() <= 1.0 + 1e-12);
        }
    }
}
