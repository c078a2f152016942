use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

/// Synthetic activity-sequence recovery pipeline.
#[derive(Debug, Parser)]
#[command(name = "vsnit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Shared {
    /// JSON file with optional `generator`, `model` and `train` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every stochastic stage; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Flavor {
    Vsnit,
    Baseline,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate person-days, mask them and write train/valid/test splits.
    Gen {
        #[command(flatten)]
        shared: Shared,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        person_days: Option<usize>,
        #[arg(long)]
        p_remove: Option<f64>,
    },
    /// Train a model on a sample file and write a checkpoint.
    Train {
        #[command(flatten)]
        shared: Shared,
        /// Sample file (JSON lines).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "vsnit")]
        flavor: Flavor,
        /// Checkpoint manifest path; weights and report are written next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        dropout: Option<f64>,
        #[arg(long)]
        checkpoint_every: Option<usize>,
        /// Continue from the checkpoint at `--out`.
        #[arg(long)]
        resume: bool,
    },
    /// Recover the incomplete sequences of a sample file.
    Recover {
        #[command(flatten)]
        shared: Shared,
        /// Checkpoint manifest.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Hypothesis file (JSON lines).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_rounds: Option<usize>,
    },
    /// Score hypotheses against their samples.
    Eval {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        hyps: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two hypothesis files on the same samples.
    Compare {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "vsnit")]
        label_a: String,
        #[arg(long, default_value = "baseline")]
        label_b: String,
        /// Comparison JSON; the per-cell CSV goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
