//! `bwp`: command-line driver for building wireless performance evaluation.
//!
//! Every command writes its CSV outputs and a `manifest.json` describing the
//! run into `--out-dir`. Exit status: 0 success, 2 bad arguments, 3 input
//! file error, 4 numerical failure.

mod cli;
mod commands;
mod output;

use std::fmt;
use std::fs;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use bwp_core::ErrorKind;
use cli::{Cli, Command};
use commands::Ctx;

/// Inconsistent command-line arguments that clap cannot express.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<bwp_core::Error>() {
            return match e.kind() {
                ErrorKind::Argument => 2,
                ErrorKind::Input => 3,
                ErrorKind::Numerical => 4,
            };
        }
        if cause.is::<UsageError>() {
            return 2;
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return 3;
        }
    }
    4
}

fn run(cli: Cli) -> Result<()> {
    if let Some(0) = cli.threads {
        return Err(UsageError("--threads must be at least 1".into()).into());
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let ctx = Ctx {
        out_dir: &cli.out_dir,
        threads: rayon::current_num_threads(),
    };
    match &cli.command {
        Command::EvalRoom(a) => commands::eval_room(&ctx, a),
        Command::EvalBuilding(a) => commands::eval_building(&ctx, a),
        Command::SweepDimensions(a) => commands::sweep_dims(&ctx, a),
        Command::SweepFrequency(a) => commands::sweep_freq(&ctx, a),
        Command::ValidateMc(a) => commands::validate_mc(&ctx, a),
        Command::TrainSurrogate(a) => commands::train_surrogate(&ctx, a),
        Command::Predict(a) => commands::predict(&ctx, a),
        Command::CalibrateNoise(a) => commands::calibrate(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
