//! Command-line front end tying dataset generation, solver validation, and
//! rollout evaluation together.
//!
//! Exit codes: 0 success, 1 validation failure, 2 bad input, 3 solver
//! instability.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sphkit::SphError;

#[derive(Parser)]
#[command(
    name = "sphkit",
    about = "Weakly-compressible SPH benchmark datasets: generate, validate, evaluate, inspect",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// YAML configuration file (flags and --set override it).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Dotted-key config overrides, e.g. --set solver.seed=7
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,

    /// Output directory (default: $SPHKIT_OUTPUT_ROOT/<name>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset directory (train/valid/test splits + metadata).
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Case id: tgv2d, rpf2d, ldc2d, dam2d, tgv3d, rpf3d, ldc3d.
        #[arg(long)]
        case: Option<String>,
        /// Recorded frames per trajectory (episodic) or in total (stationary).
        #[arg(long)]
        frames: Option<usize>,
        /// Number of trajectories (episodic cases).
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write per-step solver diagnostics CSVs.
        #[arg(long)]
        diagnostics: bool,
    },
    /// Run physics validation suites against analytic references.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// poiseuille | tgv2d | conservation | all
        #[arg(long, default_value = "all")]
        suite: String,
        /// Frames for the Taylor-Green decay run (default: full 126).
        #[arg(long)]
        tgv_frames: Option<usize>,
    },
    /// Autoregressive rollout evaluation of a predictor on a dataset.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Dataset directory (with metadata.json and split files).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// ground-truth | zero-acceleration | file-exchange:DIR[:MODE]
        #[arg(long)]
        predictor: Option<String>,
        /// Split to evaluate (train, valid, test).
        #[arg(long)]
        split: Option<String>,
        /// Rollout steps per trajectory.
        #[arg(long)]
        steps: Option<usize>,
        /// Cap on evaluated trajectories.
        #[arg(long)]
        trajectories: Option<usize>,
    },
    /// Summarize a dataset directory and cross-check it against the catalog.
    Inspect {
        /// Dataset directory.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Print the machine-readable case catalog instead.
        #[arg(long)]
        catalog: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            common,
            case,
            frames,
            trajectories,
            seed,
            diagnostics,
        } => commands::generate::run(common, case, frames, trajectories, seed, diagnostics),
        Command::Validate {
            common,
            suite,
            tgv_frames,
        } => commands::validate::run(common, suite, tgv_frames),
        Command::Evaluate {
            common,
            dataset,
            predictor,
            split,
            steps,
            trajectories,
        } => commands::evaluate::run(common, dataset, predictor, split, steps, trajectories),
        Command::Inspect { dataset, catalog } => commands::inspect::run(dataset, catalog),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code_for(&err)
        }
    }
}

/// Map failures onto the documented exit codes.
fn exit_code_for(err: &anyhow::Error) -> ExitCode {
    if let Some(sph) = err.downcast_ref::<SphError>() {
        return match sph {
            SphError::Instability { .. } => ExitCode::from(3),
            _ => ExitCode::from(2),
        };
    }
    ExitCode::from(2)
}
