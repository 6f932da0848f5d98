//! European option pricing by Fourier inversion and Black-Scholes implied
//! volatility extraction.
//!
//! Both inversion methods take an abstract characteristic function handle
//! (a function of complex s), so the same pricer serves the leading-order
//! CF, the corrected CF, the Black-Scholes CF, and anything else.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre_on;
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Characteristic function handle: s maps to E[exp(i s X_T)].
pub type CfHandle<'a> = &'a dyn Fn(Complex64) -> Result<Complex64>;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Black-Scholes price of a European call or put.
pub fn bs_price(spot: f64, strike: f64, tau: f64, r: f64, sigma: f64, call: bool) -> f64 {
    if tau <= 0.0 || sigma <= 0.0 {
        let intrinsic = spot - strike * (-r * tau).exp();
        return if call {
            intrinsic.max(0.0)
        } else {
            (-intrinsic).max(0.0)
        };
    }
    let srt = sigma * tau.sqrt();
    let d1 = ((spot / strike).ln() + (r + 0.5 * sigma * sigma) * tau) / srt;
    let d2 = d1 - srt;
    if call {
        spot * norm_cdf(d1) - strike * (-r * tau).exp() * norm_cdf(d2)
    } else {
        strike * (-r * tau).exp() * norm_cdf(-d2) - spot * norm_cdf(-d1)
    }
}

/// Black-Scholes vega.
fn bs_vega(spot: f64, strike: f64, tau: f64, r: f64, sigma: f64) -> f64 {
    let srt = sigma * tau.sqrt();
    let d1 = ((spot / strike).ln() + (r + 0.5 * sigma * sigma) * tau) / srt;
    spot * tau.sqrt() * (-0.5 * d1 * d1).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Characteristic function of log-price under Black-Scholes dynamics; handy
/// as a closed-form pricing oracle.
pub fn bs_cf(sigma: f64, tau: f64, r: f64, x0: f64) -> impl Fn(Complex64) -> Result<Complex64> {
    move |s: Complex64| {
        let drift = x0 + (r - 0.5 * sigma * sigma) * tau;
        Ok((I * s * drift - 0.5 * sigma * sigma * tau * s * s).exp())
    }
}

/// Integrate `f` over [0, upper] with panelled Gauss-Legendre, doubling the
/// panel count until convergence.
fn adaptive_panels(
    f: &dyn Fn(f64) -> Result<f64>,
    upper: f64,
    base_panels: usize,
    tol: f64,
) -> Result<f64> {
    let nodes = 32;
    let run = |panels: usize| -> Result<f64> {
        let mut acc = 0.0;
        for pi in 0..panels {
            let a = upper * pi as f64 / panels as f64;
            let b = upper * (pi + 1) as f64 / panels as f64;
            let (xs, ws) = gauss_legendre_on(nodes, a, b);
            for (&x, &w) in xs.iter().zip(&ws) {
                acc += w * f(x)?;
            }
        }
        Ok(acc)
    };
    let mut panels = base_panels.max(1);
    let mut prev = run(panels)?;
    for _ in 0..6 {
        panels *= 2;
        let cur = run(panels)?;
        let change = (cur - prev).abs();
        if change < tol * (1.0 + cur.abs()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged {
        last_change: f64::NAN,
    })
}

/// European call price by Gil-Pelaez inversion (two-probability form).
///
/// `cf` must satisfy cf(0) = 1. The integration range [0, s_max] is grown
/// until the integrand tail falls below 1e-12.
pub fn price_gil_pelaez(cf: CfHandle, strike: f64, tau: f64, r: f64, x0: f64) -> Result<f64> {
    let spot = x0.exp();
    let disc = (-r * tau).exp();
    let k = strike.ln();
    let cf_minus_i = cf(-I)?;
    let integrand1 = |s: f64| -> Result<f64> {
        let sc = Complex64::new(s, 0.0);
        Ok(((-I * sc * k).exp() * cf(sc - I)? / (I * sc * cf_minus_i)).re)
    };
    let integrand2 = |s: f64| -> Result<f64> {
        let sc = Complex64::new(s, 0.0);
        Ok(((-I * sc * k).exp() * cf(sc)? / (I * sc)).re)
    };
    // Find a truncation point with a negligible tail.
    let mut s_max = 100.0;
    loop {
        let t1 = integrand1(s_max)?.abs().max(integrand1(0.9 * s_max)?.abs());
        let t2 = integrand2(s_max)?.abs().max(integrand2(0.9 * s_max)?.abs());
        if t1 < 1e-12 && t2 < 1e-12 {
            break;
        }
        s_max *= 2.0;
        if s_max > 1e6 {
            return Err(Error::QuadratureNotConverged { last_change: t1.max(t2) });
        }
    }
    let base = ((s_max / 25.0).ceil() as usize).max(4);
    let p1 = 0.5 + adaptive_panels(&integrand1, s_max, base, 1e-11)? / std::f64::consts::PI;
    let p2 = 0.5 + adaptive_panels(&integrand2, s_max, base, 1e-11)? / std::f64::consts::PI;
    Ok(spot * p1 - strike * disc * p2)
}

/// COS-method call prices for a batch of strikes.
///
/// The truncation interval is sized from cumulant proxies obtained by
/// finite differences of log cf at zero, scaled by `cumulant_width`.
/// A put-call parity self-check guards the truncation
/// (`TruncationTooNarrow` beyond 1e-6).
pub fn price_cos(
    cf: CfHandle,
    strikes: &[f64],
    tau: f64,
    r: f64,
    x0: f64,
    n_terms: usize,
    cumulant_width: f64,
) -> Result<Vec<f64>> {
    Ok(price_cos_call_put(cf, strikes, tau, r, x0, n_terms, cumulant_width)?
        .into_iter()
        .map(|(c, _)| c)
        .collect())
}

/// COS-method (call, put) price pairs for a batch of strikes.
pub fn price_cos_call_put(
    cf: CfHandle,
    strikes: &[f64],
    tau: f64,
    r: f64,
    x0: f64,
    n_terms: usize,
    cumulant_width: f64,
) -> Result<Vec<(f64, f64)>> {
    let n_terms = n_terms.max(64);
    let spot = x0.exp();
    let disc = (-r * tau).exp();
    // Cumulant proxies c1, c2 from log cf near zero.
    let h = 1e-2;
    let lp = cf(Complex64::new(h, 0.0))?.ln();
    let lm = cf(Complex64::new(-h, 0.0))?.ln();
    let c1 = ((lp - lm) / (2.0 * I * h)).re;
    let c2 = (-(lp + lm) / (h * h)).re.abs();
    let width = cumulant_width * c2.sqrt();
    let (a, b) = (c1 - width, c1 + width);

    // CF factors are strike-independent; precompute them.
    let ba = b - a;
    let mut cf_terms = Vec::with_capacity(n_terms);
    for kk in 0..n_terms {
        let u = kk as f64 * std::f64::consts::PI / ba;
        let term = cf(Complex64::new(u, 0.0))? * (-I * u * a).exp();
        cf_terms.push(if kk == 0 { 0.5 * term } else { term });
    }

    let chi = |kk: usize, c: f64, d: f64| -> f64 {
        let u = kk as f64 * std::f64::consts::PI / ba;
        let tc = u * (c - a);
        let td = u * (d - a);
        (td.cos() * d.exp() - tc.cos() * c.exp() + u * (td.sin() * d.exp() - tc.sin() * c.exp()))
            / (1.0 + u * u)
    };
    let psi = |kk: usize, c: f64, d: f64| -> f64 {
        if kk == 0 {
            d - c
        } else {
            let u = kk as f64 * std::f64::consts::PI / ba;
            ((u * (d - a)).sin() - (u * (c - a)).sin()) / u
        }
    };

    let mut out = Vec::with_capacity(strikes.len());
    for &strike in strikes {
        let lk = strike.ln().clamp(a, b);
        let mut call = 0.0;
        let mut put = 0.0;
        for kk in 0..n_terms {
            let u_call = 2.0 / ba * (chi(kk, lk, b) - strike * psi(kk, lk, b));
            let u_put = 2.0 / ba * (strike * psi(kk, a, lk) - chi(kk, a, lk));
            call += (cf_terms[kk] * u_call).re;
            put += (cf_terms[kk] * u_put).re;
        }
        call *= disc;
        put *= disc;
        let parity = (call - put) - (spot - strike * disc);
        if parity.abs() > 1e-6 {
            return Err(Error::TruncationTooNarrow { defect: parity.abs() });
        }
        out.push((call, put));
    }
    Ok(out)
}

/// Black-Scholes implied volatility by safeguarded Newton iteration.
///
/// `price` must lie strictly inside the no-arbitrage bounds
/// `(max(spot - strike e^{-r tau}, 0), spot)`.
pub fn implied_vol(price: f64, strike: f64, tau: f64, r: f64, spot: f64) -> Result<f64> {
    let lower = (spot - strike * (-r * tau).exp()).max(0.0);
    let upper = spot;
    if !(price > lower && price < upper) {
        return Err(Error::OutOfBounds { price, lower, upper });
    }
    let mut lo = 1e-9;
    let mut hi = 5.0;
    // Brenner-Subrahmanyam style starting point, clipped into the bracket.
    let mut sigma = ((2.0 * std::f64::consts::PI / tau).sqrt() * price / spot).clamp(lo, hi);
    for it in 0..200 {
        let v = bs_price(spot, strike, tau, r, sigma, true) - price;
        if v.abs() < 1e-14 {
            return Ok(sigma);
        }
        if v > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        let vega = bs_vega(spot, strike, tau, r, sigma);
        let newton = sigma - v / vega;
        let next = if vega > 1e-12 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - sigma).abs() < 1e-10 {
            return Ok(next);
        }
        sigma = next;
        let _ = it;
    }
    Err(Error::NoConvergence { iterations: 200 })
}
