//! `msv` command-line entry point.

use clap::{Args, Parser, Subcommand};
use heston_msv::cli;
use std::path::PathBuf;
use std::process;

#[derive(Parser)]
#[command(name = "msv", version, about = "Heston characteristic function with fast mean-reverting volatility correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path override, e.g. --set heston.sigma=0.4 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file; a `.manifest.json` sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the characteristic functions on a real s grid.
    Charfn {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        s_min: f64,
        #[arg(long, default_value_t = 20.0)]
        s_max: f64,
        #[arg(long, default_value_t = 201)]
        s_steps: usize,
    },
    /// Implied-volatility smile for the base and corrected models.
    Smile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strike_min: f64,
        #[arg(long)]
        strike_max: f64,
        #[arg(long, default_value_t = 21)]
        n_strikes: usize,
    },
    /// Call prices and implied vols per strike.
    Price {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strike_min: f64,
        #[arg(long)]
        strike_max: f64,
        #[arg(long, default_value_t = 5)]
        n_strikes: usize,
        /// Also simulate and report Monte Carlo prices.
        #[arg(long)]
        mc: bool,
    },
    /// Compare Monte Carlo CF estimates against the analytic expressions.
    McValidate {
        #[command(flatten)]
        common: Common,
    },
    /// Compute and emit the group parameters as JSON.
    GroupParams {
        #[command(flatten)]
        common: Common,
    },
}

/// Configure the global rayon pool from MSV_THREADS (0 or unset = automatic).
fn init_threads() -> Result<(), String> {
    match std::env::var("MSV_THREADS") {
        Ok(v) => {
            let n: usize = v
                .parse()
                .map_err(|_| format!("MSV_THREADS must be a non-negative integer, got `{v}`"))?;
            if n > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| e.to_string())?;
            }
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

fn main() {
    let args = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        process::exit(cli::EXIT_CONFIG);
    }
    let result = match &args.command {
        Command::Charfn {
            common,
            s_min,
            s_max,
            s_steps,
        } => cli::cmd_charfn(
            &common.config,
            &common.overrides,
            *s_min,
            *s_max,
            *s_steps,
            &common.out,
        ),
        Command::Smile {
            common,
            strike_min,
            strike_max,
            n_strikes,
        } => cli::cmd_smile(
            &common.config,
            &common.overrides,
            *strike_min,
            *strike_max,
            *n_strikes,
            &common.out,
        ),
        Command::Price {
            common,
            strike_min,
            strike_max,
            n_strikes,
            mc,
        } => cli::cmd_price(
            &common.config,
            &common.overrides,
            *strike_min,
            *strike_max,
            *n_strikes,
            *mc,
            &common.out,
        ),
        Command::McValidate { common } => {
            cli::cmd_mc_validate(&common.config, &common.overrides, &common.out)
        }
        Command::GroupParams { common } => {
            cli::cmd_group_params(&common.config, &common.overrides, &common.out)
        }
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        process::exit(e.code);
    }
}
