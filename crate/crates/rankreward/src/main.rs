use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rankreward::cli;

/// Listwise reward learning and policy training on a synthetic dialogue task.
#[derive(Parser)]
#[command(name = "rankreward", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts and the resolved config.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scored synthetic dialogue corpus.
    GenData(RunArgs),
    /// Train the turn-level reward model on a scored corpus.
    TrainReward(RunArgs),
    /// Train the dialogue policy against a frozen reward.
    TrainPolicy(RunArgs),
    /// Evaluate a policy checkpoint with greedy rollouts.
    Eval(RunArgs),
    /// Run the categorical gradient-estimator experiment.
    Toy(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::GenData(a) => ("gen-data", a),
        Command::TrainReward(a) => ("train-reward", a),
        Command::TrainPolicy(a) => ("train-policy", a),
        Command::Eval(a) => ("eval", a),
        Command::Toy(a) => ("toy", a),
    };
    match cli::run_command(name, &args.config, &args.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
