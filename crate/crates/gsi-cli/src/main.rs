//! Experiment runner for the matrix-completion and group recommendation
//! pipeline.
//!
//! Every subcommand reads one declarative TOML config, runs a deterministic
//! pipeline, and writes CSV results with a run manifest into the output
//! directory. Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical failure.

mod commands;
mod config;
mod manifest;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Flags;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "gsi",
    version,
    about = "Low-rank matrix completion and group recommendation experiments"
)]
struct Cli {
    /// Experiment configuration file (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override every stage seed with one value
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides [output] dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for group evaluation
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Additionally render line-chart SVG files
    #[arg(long, global = true)]
    emit_svg: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the completion path and write the error-vs-nuclear-norm curve
    Complete,
    /// Compare group recommenders and write per-group metrics
    GroupRec,
    /// Recovered-rank table across shrinkage levels
    RankTable,
    /// Per-iteration convergence series of one completion
    Convergence,
    /// Emit a synthetic matrix snapshot
    Synth,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("--config is required"))?;
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = cli.seed {
        config.override_seeds(seed);
    }
    let flags = Flags {
        seed_override: cli.seed,
        out: cli.out.clone(),
        threads: cli.threads.max(1),
        emit_svg: cli.emit_svg,
    };
    match cli.command {
        Command::Complete => commands::cmd_complete(&config, &flags),
        Command::GroupRec => commands::cmd_group_rec(&config, &flags),
        Command::RankTable => commands::cmd_rank_table(&config, &flags),
        Command::Convergence => commands::cmd_convergence(&config, &flags),
        Command::Synth => commands::cmd_synth(&config, &flags),
    }
}

/// Map the error chain onto the documented exit codes. Core library errors
/// carry the class; everything else is a configuration problem.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<gsi_core::Error>() {
            return match core {
                gsi_core::Error::Config(_) => EXIT_CONFIG,
                gsi_core::Error::Data(_) | gsi_core::Error::Io(_) => EXIT_DATA,
                gsi_core::Error::NumericalFailure(_)
                | gsi_core::Error::DegenerateInput(_)
                | gsi_core::Error::InsufficientData(_) => EXIT_NUMERICAL,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_DATA;
        }
    }
    EXIT_CONFIG
}
