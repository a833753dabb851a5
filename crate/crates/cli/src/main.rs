//! `qboost` — experiment harness for the boosting engine.
//!
//! Emits a single JSON status line on stdout for scripting. Exit codes:
//! 0 success, 2 configuration error, 3 weak-learning violation (including
//! refused concept/learner pairings), 4 I/O failure.

mod config;
mod runner;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qboost_core::estimators::ErrorOracleMode;
use serde_json::json;

use config::{parse_on_off, parse_seeds, ExperimentConfig};
use runner::Failure;

#[derive(Parser)]
#[command(
    name = "qboost",
    version,
    about = "Boosting runs against exact, synthetic and simulated error oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment configuration across seeds.
    Run(RunArgs),
    /// Run the same configuration across oracle modes on shared seeds.
    Compare(CompareArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured oracle mode.
    #[arg(long)]
    oracle: Option<String>,
    /// Override seeds: a count N (seeds 0..N) or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scale the automatic round count.
    #[arg(long = "t-multiplier")]
    t_multiplier: Option<f64>,
    /// Toggle claim checking in the summary: on or off.
    #[arg(long)]
    verify: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma list of oracle modes to compare.
    #[arg(
        long,
        default_value = "exact,synthetic,adversarial-high,adversarial-low,qsim"
    )]
    modes: String,
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("reading {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_text(&text).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(oracle) = &args.oracle {
        cfg.oracle = oracle
            .parse()
            .map_err(|e| Failure::Config(format!("{e}")))?;
    }
    if let Some(seeds) = &args.seeds {
        cfg.seeds = parse_seeds(seeds).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(k) = args.t_multiplier {
        cfg.t_multiplier = k;
    }
    if let Some(v) = &args.verify {
        cfg.verify = parse_on_off(v).map_err(|e| Failure::Config(e.to_string()))?;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(serde_json::Value, i32), Failure> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load_config(&args.common)?;
            runner::run_experiment(&cfg)
        }
        Command::Compare(args) => {
            let cfg = load_config(&args.common)?;
            let modes: Vec<ErrorOracleMode> = args
                .modes
                .split(',')
                .map(|m| {
                    m.trim()
                        .parse()
                        .map_err(|e| Failure::Config(format!("{e}")))
                })
                .collect::<Result<_, _>>()?;
            runner::compare_modes(&cfg, &modes)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok((status, code)) => {
            println!("{status}");
            std::process::exit(code);
        }
        Err(failure) => {
            let status = json!({
                "status": "error",
                "exit": failure.code(),
                "message": failure.message(),
            });
            println!("{status}");
            std::process::exit(failure.code());
        }
    }
}
