use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use predproto::commands::{self, CompareArgs, EvalArgs, ExplainArgs, GenDataArgs, SampleSelector, TrainArgs};
use predproto::CliError;

/// Predefined-prototype representation learning.
///
/// Exit codes: 0 success, 2 configuration or input error, 3 training
/// divergence or other runtime failure, 4 I/O failure.
#[derive(Parser)]
#[command(name = "predproto", version)]
struct Cli {
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a generator config.
    GenData {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write a stratified train.csv/test.csv pair with this test share.
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Train a model and write a checkpoint directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the prototype loss weight.
        #[arg(long)]
        lambda_p: Option<f64>,
        /// Plain cross-entropy, no prototypes.
        #[arg(long)]
        baseline: bool,
        /// Dataset for per-epoch validation accuracy.
        #[arg(long)]
        validation: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Defaults to extractor.json next to the checkpoint.
        #[arg(long)]
        extractor: Option<PathBuf>,
        /// Directory for metrics.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed of the factor probe split.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export relevance matrices for one or all samples.
    Explain {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        extractor: Option<PathBuf>,
        /// Sample index or "all".
        #[arg(long, default_value = "0")]
        sample: SampleSelector,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train prototypes and the cross-entropy baseline over several seeds.
    Compare {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the split seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated training seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Parallel trainings.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let quiet = cli.quiet;
    match cli.command {
        Command::GenData {
            config,
            out,
            seed,
            test_fraction,
        } => commands::gen_data(&GenDataArgs {
            config,
            out,
            seed,
            test_fraction,
            quiet,
        })
        .map(drop),
        Command::Train {
            data,
            config,
            out,
            seed,
            lambda_p,
            baseline,
            validation,
        } => commands::train(&TrainArgs {
            data,
            config,
            out,
            seed,
            lambda_p,
            baseline,
            validation,
            quiet,
        })
        .map(drop),
        Command::Eval {
            checkpoint,
            data,
            extractor,
            out,
            seed,
        } => commands::eval(&EvalArgs {
            checkpoint,
            data,
            extractor,
            out,
            seed,
            quiet,
        })
        .map(drop),
        Command::Explain {
            checkpoint,
            data,
            extractor,
            sample,
            out,
        } => commands::explain(&ExplainArgs {
            checkpoint,
            data,
            extractor,
            sample,
            out,
            quiet,
        })
        .map(drop),
        Command::Compare {
            data,
            config,
            out,
            seed,
            seeds,
            jobs,
        } => commands::compare(&CompareArgs {
            data,
            config,
            out,
            seed,
            seeds,
            jobs,
            quiet,
        })
        .map(drop),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
