//! Command-line front end for the wavelet network engine: training,
//! prediction, micro-batch stream replay, speedup benchmarking, feature
//! selection and synthetic data generation.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::{CommonArgs, Mode};

#[derive(Parser)]
#[command(
    name = "spwnn",
    version,
    about = "Wavelet neural network trainer: data-parallel SGD over partitions, \
             sliding-window streaming, and speedup benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a delimited data file and report test metrics
    Train(CommonArgs),
    /// Score a data file with a saved model
    Predict(CommonArgs),
    /// Replay a data file as a micro-batch stream through a sliding window
    Stream(CommonArgs),
    /// Compare sequential and parallel training wall times
    Bench(CommonArgs),
    /// Rank features by |Welch t| and keep the best
    SelectFeatures(CommonArgs),
    /// Generate a synthetic dataset
    Synth(CommonArgs),
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Train(a) => (Mode::Train, a),
        Command::Predict(a) => (Mode::Predict, a),
        Command::Stream(a) => (Mode::Stream, a),
        Command::Bench(a) => (Mode::Bench, a),
        Command::SelectFeatures(a) => (Mode::SelectFeatures, a),
        Command::Synth(a) => (Mode::Synth, a),
    };
    commands::run(mode, args)
}
