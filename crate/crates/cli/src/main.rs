//! `lem`: data generation, training, verification suites and gate analysis.

mod analyze;
mod generate;
mod manifest;
mod train;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lem_core::Error;

#[derive(Debug, Parser)]
#[command(name = "lem", version, about = "Long Expressive Memory toolkit")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Root seed; every component derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record wall time as zero so metric files are byte-reproducible.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset (or a fast-slow trajectory) into a directory.
    Generate(generate::GenerateArgs),
    /// Train a LEM or LSTM model on a generated dataset.
    Train(train::TrainArgs),
    /// Run a verification suite and write a JSON report.
    Verify(verify::VerifyArgs),
    /// Collect the learned time-step gates of a LEM checkpoint.
    Analyze(analyze::AnalyzeArgs),
}

/// A failed verification suite, reported with exit code 1.
#[derive(Debug)]
pub struct VerificationFailed(pub String);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerificationFailed>().is_some() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::TrainingDiverged { .. } | Error::Divergence { .. } | Error::NonFinite(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let seed = cli.seed.unwrap_or(0);
    let result = match cli.command {
        Command::Generate(a) => generate::run(a, seed),
        Command::Train(a) => train::run(a, cli.seed, cli.deterministic),
        Command::Verify(a) => verify::run(a, seed),
        Command::Analyze(a) => analyze::run(a, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
