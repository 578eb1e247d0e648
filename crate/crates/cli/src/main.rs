//! `egoav`: train and evaluate audio-visual action recognition at desk
//! scale — corpus synthesis, spectrogram caching, dataset partitioning,
//! per-stream training, late fusion, and evaluation.
//!
//! Exit codes: 0 on success, 1 for invalid input or usage, 2 for runtime
//! failures.

mod commands;
mod config;
mod plots;
mod table;

use clap::{Parser, Subcommand};
use egoav_core::Result;

#[derive(Parser)]
#[command(name = "egoav", version, about = "Audio-visual action recognition pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Synth(commands::synth::SynthArgs),
    Spectrogram(commands::spectrogram::SpectrogramArgs),
    Partition(commands::partition::PartitionArgs),
    Train(commands::train::TrainArgs),
    Scores(commands::scores::ScoresArgs),
    Fuse(commands::fuse::FuseArgs),
    Eval(commands::eval::EvalArgs),
    Experiment(commands::experiment::ExperimentArgs),
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Spectrogram(args) => commands::spectrogram::run(args).map(|_| ()),
        Command::Partition(args) => commands::partition::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Scores(args) => commands::scores::run(args),
        Command::Fuse(args) => commands::fuse::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Experiment(args) => commands::experiment::run(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are validation failures (1); --help and
            // --version are successes (0).
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = dispatch(&cli) {
        eprintln!("error: {e}");
        std::process::exit(if e.is_validation() { 1 } else { 2 });
    }
}
