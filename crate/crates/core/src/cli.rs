//! Configuration handling and command implementations for the `msv` binary.
//!
//! All commands read one JSON configuration file (top-level keys `heston`,
//! `fast_factor`, `correlations`, plus optional `state`, `sim`,
//! `group_params`, `tau`, `sqrt_eps`, `validate_s`), apply dotted-path
//! overrides, and emit CSV or JSON plus a small run manifest alongside the
//! output file.
//!
//! Exit code contract: 0 success, 2 configuration error, 3 numerical error,
//! 4 validation (comparison) failure.

use crate::correction_cf::{corrected_cf, resolve_a_variant, AExponentVariant};
use crate::error::Error;
use crate::group_params::{compute_group_params_with, DEFAULT_GRID_SIZE};
use crate::heston_cf::psi0;
use crate::mc_engine::{estimate_cf, estimate_price, simulate, SimConfig};
use crate::params::{
    validate_correlations, validate_heston, CorrelationMatrix, EvalPoint, FastFactorSpec,
    GroupParams, HestonParams, DEFAULT_GH_NODES,
};
use crate::pricer::{implied_vol, price_gil_pelaez};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// Command failure carrying the process exit code.
#[derive(Debug)]
pub struct AppError {
    pub code: i32,
    pub message: String,
}

impl AppError {
    fn config(msg: impl Into<String>) -> Self {
        AppError {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }

    fn numerical(err: Error) -> Self {
        AppError {
            code: EXIT_NUMERICAL,
            message: err.to_string(),
        }
    }
}

pub type CmdResult = std::result::Result<(), AppError>;

/// Initial state of the simulation / evaluation point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct StateConfig {
    /// Log spot.
    pub x0: f64,
    /// Initial variance.
    pub z0: f64,
    /// Initial fast factor; defaults to the OU mean m.
    pub y0: Option<f64>,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            x0: 0.0,
            z0: 0.04,
            y0: None,
        }
    }
}

/// Pairwise correlations as they appear in the configuration file.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorrelationsConfig {
    pub rho_xy: f64,
    pub rho_xz: f64,
    pub rho_yz: f64,
}

/// Raw configuration file contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub heston: HestonParams,
    pub fast_factor: FastFactorSpec,
    #[serde(default)]
    pub correlations: Option<CorrelationsConfig>,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub sim: SimConfig,
    /// Supplied group parameters bypass the Poisson solve.
    #[serde(default)]
    pub group_params: Option<GroupParams>,
    /// Maturity for pricing commands; defaults to sim.t_horizon.
    #[serde(default)]
    pub tau: Option<f64>,
    /// Overrides sqrt(fast_factor.epsilon); may be zero.
    #[serde(default)]
    pub sqrt_eps: Option<f64>,
    /// Fourier arguments for mc-validate.
    #[serde(default)]
    pub validate_s: Option<Vec<f64>>,
}

/// Fully validated model ready for computation.
pub struct Model {
    pub heston: HestonParams,
    pub fast_factor: FastFactorSpec,
    pub corr: CorrelationMatrix,
    pub group: GroupParams,
    pub sqrt_eps: f64,
    pub state: StateConfig,
    pub sim: SimConfig,
    pub tau: f64,
    pub validate_s: Option<Vec<f64>>,
    pub digest: String,
}

/// Apply `key.path=value` overrides to the parsed JSON document.
fn apply_overrides(
    doc: &mut serde_json::Value,
    overrides: &[String],
) -> std::result::Result<(), AppError> {
    for item in overrides {
        let (path, raw) = item
            .split_once('=')
            .ok_or_else(|| AppError::config(format!("override `{item}` is not key=value")))?;
        let value: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        let mut cursor = &mut *doc;
        let parts: Vec<&str> = path.split('.').collect();
        let (last, parents) = parts.split_last().expect("split produced a segment");
        for part in parents {
            cursor = cursor
                .as_object_mut()
                .ok_or_else(|| AppError::config(format!("override path `{path}` not an object")))?
                .entry(part.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
        }
        cursor
            .as_object_mut()
            .ok_or_else(|| AppError::config(format!("override path `{path}` not an object")))?
            .insert(last.to_string(), value);
    }
    Ok(())
}

/// Load, override, validate, and resolve a configuration file.
pub fn load_model(path: &Path, overrides: &[String]) -> std::result::Result<Model, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| AppError::config(format!("invalid JSON: {e}")))?;
    apply_overrides(&mut doc, overrides)?;
    let cfg: ModelConfig = serde_json::from_value(doc.clone())
        .map_err(|e| AppError::config(format!("invalid configuration: {e}")))?;

    let heston = validate_heston(cfg.heston).map_err(|e| AppError::config(e.to_string()))?;
    cfg.fast_factor
        .validate()
        .map_err(|e| AppError::config(e.to_string()))?;
    if let Some(c) = &cfg.correlations {
        // The correlations block duplicates per-type fields; they must agree.
        if c.rho_xz != heston.rho_xz
            || c.rho_xy != cfg.fast_factor.rho_xy
            || c.rho_yz != cfg.fast_factor.rho_yz
        {
            return Err(AppError::config(
                "correlations block disagrees with heston/fast_factor fields".to_string(),
            ));
        }
    }
    let corr = validate_correlations(cfg.fast_factor.rho_xy, heston.rho_xz, cfg.fast_factor.rho_yz)
        .map_err(|e| AppError::config(e.to_string()))?;
    cfg.sim
        .validate()
        .map_err(|e| AppError::config(e.to_string()))?;

    let group = match cfg.group_params {
        Some(g) => {
            g.validate().map_err(|e| AppError::config(e.to_string()))?;
            g
        }
        None => compute_group_params_with(&cfg.fast_factor, &heston, DEFAULT_GRID_SIZE, DEFAULT_GH_NODES)
            .map_err(AppError::numerical)?,
    };
    let sqrt_eps = match cfg.sqrt_eps {
        Some(v) if v >= 0.0 && v.is_finite() => v,
        Some(v) => return Err(AppError::config(format!("sqrt_eps must be >= 0, got {v}"))),
        None => cfg.fast_factor.epsilon.sqrt(),
    };
    let tau = cfg.tau.unwrap_or(cfg.sim.t_horizon);
    if !(tau > 0.0) {
        return Err(AppError::config(format!("tau must be > 0, got {tau}")));
    }
    if !(cfg.state.z0 > 0.0) {
        return Err(AppError::config(format!("z0 must be > 0, got {}", cfg.state.z0)));
    }

    let mut hasher = Sha256::new();
    hasher.update(doc.to_string().as_bytes());
    let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();

    Ok(Model {
        heston,
        fast_factor: cfg.fast_factor,
        corr,
        group,
        sqrt_eps,
        state: cfg.state,
        sim: cfg.sim,
        tau,
        validate_s: cfg.validate_s,
        digest,
    })
}

/// Run provenance written alongside every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params_digest: String,
    pub tool_version: String,
    pub timestamp: String,
    pub sign_convention_b: String,
    pub a_exponent_variant: String,
    pub warnings: u32,
}

impl RunManifest {
    fn new(command: &str, model: &Model, warnings: u32) -> Self {
        let variant = resolve_a_variant(&model.heston, &model.group)
            .map(|(v, _)| v)
            .unwrap_or(AExponentVariant::Corrected);
        RunManifest {
            command: command.to_string(),
            params_digest: model.digest.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            sign_convention_b: "FirstListed".to_string(),
            a_exponent_variant: match variant {
                AExponentVariant::Corrected => "Corrected".to_string(),
                AExponentVariant::AsPrinted => "AsPrinted".to_string(),
            },
            warnings,
        }
    }
}

/// 17-significant-digit float formatting (round-trip safe).
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_output(out: &Path, body: &str, manifest: &RunManifest) -> CmdResult {
    std::fs::write(out, body).map_err(|e| AppError {
        code: EXIT_NUMERICAL,
        message: format!("cannot write {}: {e}", out.display()),
    })?;
    let mpath = out.with_extension(format!(
        "{}manifest.json",
        out.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let text = serde_json::to_string_pretty(manifest).expect("manifest serialization");
    std::fs::write(&mpath, text).map_err(|e| AppError {
        code: EXIT_NUMERICAL,
        message: format!("cannot write {}: {e}", mpath.display()),
    })?;
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// `charfn`: psi0 and corrected CF on a real s grid.
pub fn cmd_charfn(
    config: &Path,
    overrides: &[String],
    s_min: f64,
    s_max: f64,
    s_steps: usize,
    out: &Path,
) -> CmdResult {
    let model = load_model(config, overrides)?;
    if s_steps == 0 || s_max < s_min {
        return Err(AppError::config("empty s grid".to_string()));
    }
    let mut body = String::from("s,re_psi0,im_psi0,re_corrected,im_corrected\n");
    for s in linspace(s_min, s_max, s_steps) {
        let pt = EvalPoint::new(model.tau, model.state.x0, model.state.z0, Complex64::new(s, 0.0))
            .map_err(AppError::numerical)?;
        let base = psi0(&pt, &model.heston, model.group.rho_eff).map_err(AppError::numerical)?;
        let corr = corrected_cf(&pt, &model.heston, &model.group, model.sqrt_eps)
            .map_err(AppError::numerical)?;
        writeln!(
            body,
            "{},{},{},{},{}",
            fmt(s),
            fmt(base.re),
            fmt(base.im),
            fmt(corr.re),
            fmt(corr.im)
        )
        .unwrap();
    }
    write_output(out, &body, &RunManifest::new("charfn", &model, 0))
}

/// `smile`: implied-vol columns for the uncorrected and corrected models.
pub fn cmd_smile(
    config: &Path,
    overrides: &[String],
    strike_min: f64,
    strike_max: f64,
    n_strikes: usize,
    out: &Path,
) -> CmdResult {
    let model = load_model(config, overrides)?;
    if n_strikes == 0 || strike_max < strike_min || strike_min <= 0.0 {
        return Err(AppError::config("invalid strike grid".to_string()));
    }
    let (p, g, tau, x0, z0) = (
        model.heston,
        model.group,
        model.tau,
        model.state.x0,
        model.state.z0,
    );
    let spot = x0.exp();
    let cf0 = move |s| psi0(&EvalPoint { tau, x: x0, z: z0, s }, &p, g.rho_eff);
    let sqrt_eps = model.sqrt_eps;
    let cfc = move |s| corrected_cf(&EvalPoint { tau, x: x0, z: z0, s }, &p, &g, sqrt_eps);
    let mut warnings = 0u32;
    let mut body = String::from("strike,iv_heston0,iv_corrected\n");
    for k in linspace(strike_min, strike_max, n_strikes) {
        let mut ivs = Vec::with_capacity(2);
        for cf in [&cf0 as crate::pricer::CfHandle, &cfc] {
            let price = price_gil_pelaez(cf, k, tau, p.r, x0).map_err(AppError::numerical)?;
            match implied_vol(price, k, tau, p.r, spot) {
                Ok(iv) => ivs.push(fmt(iv)),
                Err(Error::OutOfBounds { .. }) => {
                    warnings += 1;
                    ivs.push(String::new());
                }
                Err(e) => return Err(AppError::numerical(e)),
            }
        }
        writeln!(body, "{},{},{}", fmt(k), ivs[0], ivs[1]).unwrap();
    }
    write_output(out, &body, &RunManifest::new("smile", &model, warnings))
}

/// `price`: call prices and implied vols per strike and model.
pub fn cmd_price(
    config: &Path,
    overrides: &[String],
    strike_min: f64,
    strike_max: f64,
    n_strikes: usize,
    with_mc: bool,
    out: &Path,
) -> CmdResult {
    let model = load_model(config, overrides)?;
    if n_strikes == 0 || strike_max < strike_min || strike_min <= 0.0 {
        return Err(AppError::config("invalid strike grid".to_string()));
    }
    let (p, g, tau, x0, z0) = (
        model.heston,
        model.group,
        model.tau,
        model.state.x0,
        model.state.z0,
    );
    let spot = x0.exp();
    let strikes = linspace(strike_min, strike_max, n_strikes);
    let mut warnings = 0u32;
    let mut body = String::from("strike,price,implied_vol,model\n");
    let emit = |body: &mut String, k: f64, price: f64, label: &str, warnings: &mut u32| {
        let iv = match implied_vol(price, k, tau, p.r, spot) {
            Ok(v) => fmt(v),
            Err(_) => {
                *warnings += 1;
                String::new()
            }
        };
        writeln!(body, "{},{},{},{label}", fmt(k), fmt(price), iv).unwrap();
    };
    let cf0 = move |s| psi0(&EvalPoint { tau, x: x0, z: z0, s }, &p, g.rho_eff);
    let sqrt_eps = model.sqrt_eps;
    let cfc = move |s| corrected_cf(&EvalPoint { tau, x: x0, z: z0, s }, &p, &g, sqrt_eps);
    for &k in &strikes {
        let price = price_gil_pelaez(&cf0, k, tau, p.r, x0).map_err(AppError::numerical)?;
        emit(&mut body, k, price, "heston0", &mut warnings);
    }
    for &k in &strikes {
        let price = price_gil_pelaez(&cfc, k, tau, p.r, x0).map_err(AppError::numerical)?;
        emit(&mut body, k, price, "corrected", &mut warnings);
    }
    if with_mc {
        let y0 = model.state.y0.unwrap_or(model.fast_factor.m);
        let batch = simulate(&p, &model.fast_factor, &model.corr, x0, y0, z0, &model.sim)
            .map_err(AppError::numerical)?;
        for (i, (price, _)) in estimate_price(&batch, &strikes, p.r, model.sim.t_horizon)
            .into_iter()
            .enumerate()
        {
            emit(&mut body, strikes[i], price, "mc", &mut warnings);
        }
    }
    write_output(out, &body, &RunManifest::new("price", &model, warnings))
}

/// `mc-validate`: Monte Carlo CF estimates vs psi0 and the corrected CF,
/// with 3-sigma pass/fail per row. Exit 4 if any row fails.
pub fn cmd_mc_validate(config: &Path, overrides: &[String], out: &Path) -> CmdResult {
    let model = load_model(config, overrides)?;
    let (p, g) = (model.heston, model.group);
    let y0 = model.state.y0.unwrap_or(model.fast_factor.m);
    let batch = simulate(
        &p,
        &model.fast_factor,
        &model.corr,
        model.state.x0,
        y0,
        model.state.z0,
        &model.sim,
    )
    .map_err(AppError::numerical)?;
    let s_grid = model
        .validate_s
        .clone()
        .unwrap_or_else(|| vec![0.5, 1.0, 2.0, 5.0]);
    let estimates = estimate_cf(&batch, &s_grid);
    let tau = model.sim.t_horizon;
    let mut body =
        String::from("s,re_mc,im_mc,stderr,re_psi0,im_psi0,re_corrected,im_corrected,pass\n");
    let mut all_pass = true;
    for (i, &s) in s_grid.iter().enumerate() {
        let pt = EvalPoint::new(tau, model.state.x0, model.state.z0, Complex64::new(s, 0.0))
            .map_err(AppError::numerical)?;
        let base = psi0(&pt, &p, g.rho_eff).map_err(AppError::numerical)?;
        let corr = corrected_cf(&pt, &p, &g, model.sqrt_eps).map_err(AppError::numerical)?;
        let (est, se) = estimates[i];
        let pass = (est - corr).norm() <= 3.0 * se;
        all_pass &= pass;
        writeln!(
            body,
            "{},{},{},{},{},{},{},{},{}",
            fmt(s),
            fmt(est.re),
            fmt(est.im),
            fmt(se),
            fmt(base.re),
            fmt(base.im),
            fmt(corr.re),
            fmt(corr.im),
            if pass { 1 } else { 0 }
        )
        .unwrap();
    }
    write_output(out, &body, &RunManifest::new("mc-validate", &model, 0))?;
    if all_pass {
        Ok(())
    } else {
        Err(AppError {
            code: EXIT_VALIDATION,
            message: "Monte Carlo comparison failed the 3-sigma band".to_string(),
        })
    }
}

/// `group-params`: emit the computed V1..V4 as JSON with metadata.
pub fn cmd_group_params(config: &Path, overrides: &[String], out: &Path) -> CmdResult {
    let model = load_model(config, overrides)?;
    let payload = serde_json::json!({
        "v1": model.group.v1,
        "v2": model.group.v2,
        "v3": model.group.v3,
        "v4": model.group.v4,
        "rho_eff": model.group.rho_eff,
        "f_bar": model.group.f_bar,
        "metadata": {
            "grid_size": DEFAULT_GRID_SIZE,
            "gh_nodes": DEFAULT_GH_NODES,
        },
    });
    let body = serde_json::to_string_pretty(&payload).expect("JSON serialization");
    write_output(out, &body, &RunManifest::new("group-params", &model, 0))
}
