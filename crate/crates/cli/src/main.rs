use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use leeyang_cli::commands::{self, Runtime};
use leeyang_cli::config::ExperimentConfig;

/// Zeros of ferromagnetic spin-bath partition functions and the probe-pair
/// dynamics that reveal them.
#[derive(Parser)]
#[command(name = "leeyang", version, arg_required_else_help = true)]
struct Cli {
    /// Path to the experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides the config's `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for the randomized verification draws.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write sector-weight tables for every configured temperature.
    Weights,
    /// Locate partition-function zeros; optionally scan a sampled signal.
    Zeros {
        /// Two-column CSV (time, value) to scan for signal zeros.
        #[arg(long)]
        signal: Option<PathBuf>,
    },
    /// Sweep probe dynamics over the time grid, marking predicted zero times.
    Dynamics,
    /// Run the randomized verification suites and validate stored outputs.
    Verify,
    /// Emit the full figure bundle: circles, traces, and zero markers per temperature.
    Figures,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let Some(config_path) = cli.config else {
        bail!("--config <path> is required");
    };
    let raw = std::fs::read(&config_path)
        .with_context(|| format!("reading config {}", config_path.display()))?;
    let text = std::str::from_utf8(&raw).context("config must be UTF-8")?;
    let config = ExperimentConfig::parse(text)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let out_dir = cli.out.unwrap_or_else(|| PathBuf::from(config.output_dir()));
    let rt = Runtime::new(config, &raw, out_dir, cli.seed);
    match cli.cmd {
        Cmd::Weights => commands::cmd_weights(&rt)?,
        Cmd::Zeros { signal } => commands::cmd_zeros(&rt, signal.as_deref())?,
        Cmd::Dynamics => commands::cmd_dynamics(&rt)?,
        Cmd::Verify => {
            if !commands::cmd_verify(&rt)? {
                std::process::exit(1);
            }
        }
        Cmd::Figures => commands::cmd_figures(&rt)?,
    }
    Ok(())
}
