//! Command-line front end for the fraclab library.
//!
//! Four subcommands cover the full workflow: `generate` simulates labelled
//! trajectories, `train` fits the recurrent estimator, `estimate` applies
//! estimators to measured series, and `evaluate` benchmarks estimators
//! against each other on fresh synthetic data.
//!
//! Every run prints its fully resolved configuration and writes it to
//! `config.txt` in the output directory; feeding that file back through
//! `--config` reproduces the run byte for byte. `--threads` controls the
//! worker pool without affecting any output.

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use fraclab::Error;

mod config;
mod estimate;
mod evaluate;
mod generate;
mod process_args;
mod train;

#[derive(Parser)]
#[command(name = "fraclab", version, about = "fractional process lab", max_term_width = 100)]
struct Cli {
    /// Worker threads (0 = one per core). Outputs never depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate trajectories and write them to a binary or CSV file.
    Generate(generate::Args),
    /// Train the recurrent exponent estimator on freshly simulated paths.
    Train(train::Args),
    /// Estimate the exponent of measured series from a CSV file.
    Estimate(estimate::Args),
    /// Benchmark estimators on labelled trajectories over a length grid.
    Evaluate(evaluate::Args),
}

/// 2 = rejected configuration, 3 = numerical failure, 4 = I/O or file
/// format trouble.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::EmptyInput => 2,
        Error::EmbeddingFailure { .. }
        | Error::Unstable(_)
        | Error::DegenerateInput(_)
        | Error::OptimizationFailure(_)
        | Error::NonFinite(_)
        | Error::BatchFailure(_) => 3,
        Error::Parse { .. } | Error::Corrupt(_) | Error::VersionMismatch { .. } | Error::Io(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // Ignore the error from a second initialization: tests may run
        // several commands in one process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }

    let started = Instant::now();
    let result = match &cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Train(args) => train::run(args),
        Command::Estimate(args) => estimate::run(args),
        Command::Evaluate(args) => evaluate::run(args),
    };
    match result {
        Ok(()) => {
            eprintln!("done in {:.3} s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
