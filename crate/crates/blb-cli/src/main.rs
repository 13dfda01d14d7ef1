use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use blb_cli::config::ConfigFile;
use blb_cli::runner::{oracle_report, run_experiment, sweep};

/// Simulation harness for state-representation selection in average-reward
/// reinforcement learning.
#[derive(Parser)]
#[command(name = "blb", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment for every seed and write per-seed trace
    /// and regret CSVs plus an aggregate JSON summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config horizon.
        #[arg(long)]
        horizon: Option<u64>,
        /// Override the config seed list (comma separated).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Override the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the experiment at several horizons and write one regret row per
    /// (horizon, seed) plus per-horizon means.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Strictly increasing horizons (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the exact oracles (gain, policy, diameter, hitting-time
    /// extremes) for each Markov-flagged representation.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            horizon,
            seeds,
            out,
        } => {
            let mut file = ConfigFile::load(&config).context("loading config")?;
            if let Some(horizon) = horizon {
                file.horizon = horizon;
            }
            if let Some(seeds) = seeds {
                file.seeds = seeds;
            }
            if let Some(out) = out {
                file.output.dir = out;
            }
            let experiment = file.resolve().context("validating config")?;
            let output = run_experiment(&experiment).context("running experiment")?;
            println!(
                "rho* = {:.9} (best Markov representation: index {})",
                output.rho_star, output.best_markov_index
            );
            for outcome in &output.outcomes {
                println!(
                    "seed {:>4}: regret(T) = {:.4}",
                    outcome.seed,
                    outcome.report.final_regret()
                );
            }
            println!("summary: {}", output.summary_path.display());
        }
        Command::Sweep {
            config,
            horizons,
            out,
        } => {
            let mut file = ConfigFile::load(&config).context("loading config")?;
            if let Some(out) = out {
                file.output.dir = out;
            }
            let experiment = file.resolve().context("validating config")?;
            let (path, rows) = sweep(&experiment, &horizons).context("running sweep")?;
            for row in rows.iter().filter(|r| r.seed.is_none()) {
                println!(
                    "T = {:>8}: mean regret = {:.4}, regret/T = {:.6}, regret/T^(2/3) = {:.4}",
                    row.horizon, row.regret, row.regret_per_step, row.regret_per_t23
                );
            }
            println!("sweep: {}", path.display());
        }
        Command::Oracle { config } => {
            let file = ConfigFile::load(&config).context("loading config")?;
            let experiment = file.resolve().context("validating config")?;
            print!("{}", oracle_report(&experiment).context("solving oracles")?);
        }
    }
    Ok(())
}
