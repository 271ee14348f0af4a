//! `csit` — command-line front end for the sweep harness.
//!
//! Subcommands:
//!   run     Monte Carlo sweep, CSV or JSON output
//!   timing  per-link wall-time comparison across antenna counts
//!   bounds  closed-form bound evaluation only
//!
//! Configuration comes from a flat `key = value` file (see `config.rs` for
//! the key list); every key can be overridden through a `CSIT_`-prefixed
//! environment variable, and the most common ones through flags.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use csit_core::harness::{self, OutputFormat};

#[derive(Parser)]
#[command(name = "csit", version, about = "Joint-sparse massive MIMO channel estimation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured Monte Carlo sweep.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count per sweep point.
        #[arg(long)]
        trials: Option<usize>,
        /// Output file (defaults to the config's `out`, else stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output encoding.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Disable measurement noise.
        #[arg(long)]
        noiseless: bool,
    },
    /// Measure per-link recovery time across antenna counts.
    Timing {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the closed-form bounds without running recovery.
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn build_pool(jobs: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { common, seed, trials, out, format, noiseless } => {
            build_pool(common.jobs)?;
            let mut file_cfg = config::load(&common.config)?;
            if let Some(s) = seed {
                file_cfg.cfg.seed = s;
            }
            if let Some(t) = trials {
                file_cfg.cfg.trials = t;
            }
            if noiseless {
                file_cfg.cfg.noiseless = true;
            }
            let format: OutputFormat = format.parse()?;
            let table = harness::run_sweep(&file_cfg.cfg)?;
            let out = out.or_else(|| file_cfg.cfg.output_path.clone());
            match out {
                Some(path) => {
                    harness::emit(&table, format, &path)?;
                    eprintln!("wrote {} rows to {}", table.rows.len(), path.display());
                }
                None => match format {
                    OutputFormat::Csv => print!("{}", harness::to_csv(&table)),
                    OutputFormat::Json => {
                        println!("{}", serde_json::to_string_pretty(&table)?)
                    }
                },
            }
        }
        Command::Timing { common } => {
            build_pool(common.jobs)?;
            let file_cfg = config::load(&common.config)?;
            let table = harness::timing_table(&file_cfg.cfg, &file_cfg.timing_m)?;
            print!("{}", harness::to_csv(&table));
        }
        Command::Bounds { common } => {
            build_pool(common.jobs)?;
            let file_cfg = config::load(&common.config)?;
            let rows = harness::bound_report(&file_cfg.cfg)?;
            println!("{}", serde_json::to_string_pretty(&rows)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // single machine-readable line on stderr
            let line = serde_json::json!({ "error": err.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
