//! `sharebounty` — solve the attacker game, tune and sweep bounty
//! schedules, replay protocol scenarios, and price the extraction case
//! study.
//!
//! Exit codes: 0 on success, 1 when a scripted assertion fails, 2 for
//! configuration or usage errors.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use commands::{AssertionFailure, CaseStudyArgs};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "sharebounty", version, about = "Share-bounty wallet laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration (defaults to the built-in reference setup).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for artifacts (overrides the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(&config.out_dir));
        Ok((config, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the attacker's decision problem and write policy and value
    /// tables.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Search the blend-weight grid for the schedule that minimizes the
    /// defender's score.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid pitch of the search (overrides the config).
        #[arg(long, value_name = "F")]
        grid_step: Option<f64>,
    },
    /// Optimize, then score champion and baselines over the capability
    /// grid; writes CSV and per-schedule SVG heatmaps.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid pitch of the search (overrides the config).
        #[arg(long, value_name = "F")]
        grid_step: Option<f64>,
        /// Worker threads for sweep cells; 0 uses every core. Output is
        /// identical for any value.
        #[arg(long, value_name = "N", default_value_t = 0)]
        jobs: usize,
    },
    /// Replay a scripted protocol scenario and write its event log.
    Simulate {
        /// Scenario script (JSON).
        scenario: PathBuf,
        /// Override the scenario's random seed.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        /// Output directory for artifacts.
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Price share extraction from transaction-trace requirements.
    CaseStudy {
        /// Traces needed to recover one share.
        #[arg(long, default_value_t = 4096)]
        traces: u64,
        /// Observable transactions per day.
        #[arg(long, default_value_t = 230)]
        tx_per_day: u64,
        /// Cloud rental cost per attack day.
        #[arg(long, default_value_t = 97.9)]
        cloud_cost: f64,
        /// Full key value.
        #[arg(long, default_value_t = 36_000.0)]
        key_value: f64,
        /// Shares required to recover the key.
        #[arg(long, default_value_t = 10)]
        threshold: u32,
        /// Total shares outstanding.
        #[arg(long, default_value_t = 20)]
        shares: u32,
        /// Rotation horizon in days.
        #[arg(long, default_value_t = 30)]
        horizon_days: u32,
        /// Output directory for artifacts.
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { common } => {
            let (config, out) = common.load()?;
            commands::cmd_solve(&config, &out)
        }
        Command::Optimize { common, grid_step } => {
            let (mut config, out) = common.load()?;
            if let Some(step) = grid_step {
                config.grid_step = step;
                config.validate()?;
            }
            commands::cmd_optimize(&config, &out).map(|_| ())
        }
        Command::Sweep { common, grid_step, jobs } => {
            let (mut config, out) = common.load()?;
            if let Some(step) = grid_step {
                config.grid_step = step;
                config.validate()?;
            }
            commands::cmd_sweep(&config, &out, jobs)
        }
        Command::Simulate { scenario, seed, out } => {
            commands::cmd_simulate(&scenario, seed, &out)
        }
        Command::CaseStudy {
            traces,
            tx_per_day,
            cloud_cost,
            key_value,
            threshold,
            shares,
            horizon_days,
            out,
        } => {
            let args = CaseStudyArgs {
                traces,
                tx_per_day,
                cloud_cost,
                key_value,
                threshold,
                shares,
                horizon_days,
            };
            commands::cmd_case_study(&args, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.is::<AssertionFailure>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
