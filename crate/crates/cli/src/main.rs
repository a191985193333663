//! `afs`: optimal trading under nonlinear transient impact from the command
//! line.

mod args;
mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::args::Usage;
use crate::commands::*;

#[derive(Debug, Parser)]
#[command(name = "afs", version, about = "Optimal trading, calibration and misspecification costs under nonlinear price impact")]
struct Cli {
    /// Random seed for every stochastic step.
    #[arg(long, default_value_t = 42, global = true)]
    seed: u64,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Optimal impact, state and position path for a given alpha.
    Optimize(OptimizeArgs),
    /// Monte Carlo P&L of a possibly misspecified policy.
    Backtest(BacktestArgs),
    /// Synthetic meta-order fills executed under known impact parameters.
    Synth(SynthArgs),
    /// Fit R^2 and g over a (c, tau) lattice, plus log-log and bootstrap fits.
    Calibrate(CalibrateArgs),
    /// Profit ratio over believed concavity and Sharpe ratio.
    ScanConcavity(ScanConcavityArgs),
    /// Steady-state profit ratio over believed decay and alpha decay.
    ScanDecay(ScanDecayArgs),
    /// Fit-quality versus P&L sensitivity to the concavity.
    CompareFig1(CompareFig1Args),
    /// Square-root sizing, implied alpha and best-execution check.
    Tca(TcaArgs),
}

fn run(cli: Cli) -> anyhow::Result<String> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Usage("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut echo = serde_json::to_value(&cli.command)?;
    echo["seed"] = cli.seed.into();
    let ctx = Context {
        seed: cli.seed,
        echo,
    };
    match &cli.command {
        Command::Optimize(a) => optimize(&ctx, a),
        Command::Backtest(a) => backtest(&ctx, a),
        Command::Synth(a) => synth(&ctx, a),
        Command::Calibrate(a) => calibrate(&ctx, a),
        Command::ScanConcavity(a) => scan_concavity(&ctx, a),
        Command::ScanDecay(a) => scan_decay(&ctx, a),
        Command::CompareFig1(a) => compare_fig1(&ctx, a),
        Command::Tca(a) => tca(&ctx, a),
    }
}

fn is_validation(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        cause.downcast_ref::<Usage>().is_some()
            || cause
                .downcast_ref::<afs_core::Error>()
                .is_some_and(afs_core::Error::is_validation)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_validation(&e) { 2 } else { 1 })
        }
    }
}
