//! `tunai`: synthesize, build, train, evaluate and predict.
//!
//! Exit codes: 0 success, 2 bad input or schema, 3 training failure,
//! 4 model and dataset disagree at evaluation time.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BuildArgs, EvalArgs, PredictArgs, SynthArgs, TrainArgs};

#[derive(Debug, Parser)]
#[command(name = "tunai", version, about = "Tuna biomass estimation from echo-sounder buoys")]
struct Cli {
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic world with known biomass.
    Synth(SynthArgs),
    /// Link, window, clean and label events into a dataset.
    Build(BuildArgs),
    /// Grid-search and fit a model.
    Train(TrainArgs),
    /// Score a saved model on a dataset split.
    Eval(EvalArgs),
    /// Apply a saved model to feature rows.
    Predict(PredictArgs),
}

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_TRAIN: u8 = 3;
pub const EXIT_EVAL: u8 = 4;

fn exit_code(err: &anyhow::Error, command: &Command) -> u8 {
    use tunai::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::SchemaMismatch { .. }) if matches!(command, Command::Eval(_) | Command::Predict(_)) => EXIT_EVAL,
        Some(E::AllCandidatesFailed(_) | E::NonConvergence { .. }) => EXIT_TRAIN,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Build(a) => commands::build(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Predict(a) => commands::predict(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e, &cli.command))
        }
    }
}
