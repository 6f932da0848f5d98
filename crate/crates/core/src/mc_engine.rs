//! Full-model Monte Carlo oracle.
//!
//! Simulates the three-factor system (X, Y, Z) with full-truncation Euler
//! for the CIR variance, log-Euler for the spot, and exact OU conditional
//! transitions for the fast factor on an adaptive sub-clock. Each path has
//! its own counter-based RNG stream derived from (seed, path index), so
//! results are bit-identical regardless of thread count.

use crate::error::{Error, Result};
use crate::params::{CorrelationMatrix, FastFactorSpec, HestonParams};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Simulation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Macro steps over [0, t_horizon].
    pub n_steps: usize,
    pub t_horizon: f64,
    pub seed: u64,
    /// Max fast-clock increment (Z/eps) * dt per substep.
    pub y_substep_target: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_paths: 200_000,
            n_steps: 512,
            t_horizon: 1.0,
            seed: 42,
            y_substep_target: 0.1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(Error::InvalidParameter {
                field: "n_paths",
                message: "must be >= 1".into(),
            });
        }
        if self.n_steps < 1 {
            return Err(Error::InvalidParameter {
                field: "n_steps",
                message: "must be >= 1".into(),
            });
        }
        if !(self.t_horizon.is_finite() && self.t_horizon > 0.0) {
            return Err(Error::InvalidParameter {
                field: "t_horizon",
                message: format!("must be > 0, got {}", self.t_horizon),
            });
        }
        if !(self.y_substep_target > 0.0 && self.y_substep_target <= 1.0) {
            return Err(Error::InvalidParameter {
                field: "y_substep_target",
                message: format!("must be in (0, 1], got {}", self.y_substep_target),
            });
        }
        Ok(())
    }
}

/// Terminal log-price samples with provenance.
#[derive(Debug, Clone)]
pub struct PathBatch {
    pub x_terminal: Vec<f64>,
    pub config: SimConfig,
    /// SHA-256 digest over all model parameters and the initial state.
    pub model_hash: String,
}

fn model_digest(
    p: &HestonParams,
    spec: &FastFactorSpec,
    corr: &CorrelationMatrix,
    x0: f64,
    y0: f64,
    z0: f64,
    cfg: &SimConfig,
) -> String {
    let mut hasher = Sha256::new();
    let blob = serde_json::json!({
        "heston": p, "fast_factor": spec, "correlations": corr,
        "x0": x0, "y0": y0, "z0": z0, "sim": cfg,
    });
    hasher.update(blob.to_string().as_bytes());
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-path RNG stream: ChaCha seeded from (seed, path index).
fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[0..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&path.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

fn simulate_path(
    p: &HestonParams,
    spec: &FastFactorSpec,
    corr: &CorrelationMatrix,
    x0: f64,
    y0: f64,
    z0: f64,
    cfg: &SimConfig,
    path: u64,
) -> f64 {
    let mut rng = path_rng(cfg.seed, path);
    let dt = cfg.t_horizon / cfg.n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let (mut x, mut y, mut z) = (x0, y0, z0);
    let mut bridge = Vec::new();
    for _ in 0..cfg.n_steps {
        let xi = [
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ];
        let dw = corr.correlate(xi);
        let (dwx, dwy, dwz) = (dw[0] * sqrt_dt, dw[1] * sqrt_dt, dw[2] * sqrt_dt);
        let zp = z.max(0.0);
        let f = spec.f(y);

        // Log-Euler spot and full-truncation Euler variance.
        x += (p.r - 0.5 * f * f * zp) * dt + zp.sqrt() * f * dwx;
        let z_next = z + p.kappa * (p.theta - zp) * dt + p.sigma * zp.sqrt() * dwz;

        // Fast factor: exact OU transitions with frozen clock rate Z+/eps,
        // substepped so each substep advances the fast clock by at most
        // y_substep_target. Substeps consume bridged increments of W_y.
        let rate = zp / spec.epsilon;
        let n_sub = ((rate * dt / cfg.y_substep_target).ceil() as usize).max(1);
        let dt_sub = dt / n_sub as f64;
        bridge.clear();
        if n_sub == 1 {
            bridge.push(dwy);
        } else {
            let mut total = 0.0;
            for _ in 0..n_sub {
                let g: f64 = rng.sample::<f64, _>(StandardNormal);
                let g = g * dt_sub.sqrt();
                bridge.push(g);
                total += g;
            }
            let shift = (total - dwy) / n_sub as f64;
            for g in bridge.iter_mut() {
                *g -= shift;
            }
        }
        let decay = (-rate * dt_sub).exp();
        // Stationary-consistent noise scale: nu * sqrt(1 - e^{-2 rate h}).
        let noise = spec.nu * (-f64::exp_m1(-2.0 * rate * dt_sub)).sqrt() / dt_sub.sqrt();
        for &dwy_sub in &bridge {
            y = spec.m + (y - spec.m) * decay + noise * dwy_sub;
        }
        z = z_next;
    }
    x
}

/// Simulate terminal log-prices for the full three-factor model.
pub fn simulate(
    p: &HestonParams,
    spec: &FastFactorSpec,
    corr: &CorrelationMatrix,
    x0: f64,
    y0: f64,
    z0: f64,
    cfg: &SimConfig,
) -> Result<PathBatch> {
    cfg.validate()?;
    spec.validate()?;
    if !(z0 > 0.0) {
        return Err(Error::InvalidParameter {
            field: "z0",
            message: format!("must be > 0, got {z0}"),
        });
    }
    let x_terminal: Vec<f64> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(p, spec, corr, x0, y0, z0, cfg, i))
        .collect();
    if let Some(bad) = x_terminal.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidState(format!(
            "non-finite terminal value at path {bad}"
        )));
    }
    Ok(PathBatch {
        x_terminal,
        config: *cfg,
        model_hash: model_digest(p, spec, corr, x0, y0, z0, cfg),
    })
}

/// Pairwise (cascade) summation: deterministic and accurate reduction order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Sample characteristic function at each real s, with combined standard
/// error (root-sum-square of the real and imaginary component errors).
pub fn estimate_cf(batch: &PathBatch, s_grid: &[f64]) -> Vec<(Complex64, f64)> {
    s_grid
        .iter()
        .map(|&s| {
            let re: Vec<f64> = batch.x_terminal.iter().map(|&x| (s * x).cos()).collect();
            let im: Vec<f64> = batch.x_terminal.iter().map(|&x| (s * x).sin()).collect();
            let (mre, sre) = mean_and_stderr(&re);
            let (mim, sim) = mean_and_stderr(&im);
            (Complex64::new(mre, mim), sre.hypot(sim))
        })
        .collect()
}

/// Discounted European call price estimates per strike.
pub fn estimate_price(batch: &PathBatch, strikes: &[f64], r: f64, t: f64) -> Vec<(f64, f64)> {
    let disc = (-r * t).exp();
    strikes
        .iter()
        .map(|&k| {
            let pay: Vec<f64> = batch
                .x_terminal
                .iter()
                .map(|&x| disc * (x.exp() - k).max(0.0))
                .collect();
            let (m, se) = mean_and_stderr(&pay);
            (m, se)
        })
        .collect()
}

/// Discounted European put price estimates per strike (same paths, so
/// put-call parity holds to rounding).
pub fn estimate_put_price(batch: &PathBatch, strikes: &[f64], r: f64, t: f64) -> Vec<(f64, f64)> {
    let disc = (-r * t).exp();
    strikes
        .iter()
        .map(|&k| {
            let pay: Vec<f64> = batch
                .x_terminal
                .iter()
                .map(|&x| disc * (k - x.exp()).max(0.0))
                .collect();
            let (m, se) = mean_and_stderr(&pay);
            (m, se)
        })
        .collect()
}
