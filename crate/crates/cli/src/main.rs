use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

/// Simulate rate-based congestion control, distill closed-form policies and evaluate them.
#[derive(Debug, Parser)]
#[command(name = "symcc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its per-window trace.
    Simulate(SimulateArgs),
    /// Record an experience dataset from an epsilon-greedy expert.
    Collect(CollectArgs),
    /// Search for expressions that imitate a dataset.
    Regress(RegressArgs),
    /// Score a policy over a scenario grid and/or a held-out dataset.
    Evaluate(EvaluateArgs),
    /// Tabulate the response surface of a symbolic policy.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the stage seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Units of x1 and x2 as seen by expressions.
    #[arg(long, value_enum)]
    units: Option<UnitsArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum UnitsArg {
    S,
    Ms,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Built-in name, infix expression, hall-of-fame JSON or `external`.
    #[arg(long)]
    policy: Option<String>,
    /// Overrides the scenario duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Debug, Args)]
struct CollectArgs {
    #[command(flatten)]
    common: Common,
    /// Expert policy; defaults to the config's.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    /// Worker threads for parallel runs.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct RegressArgs {
    #[command(flatten)]
    common: Common,
    /// Experience CSV written by `collect`.
    #[arg(long)]
    dataset: PathBuf,
    /// Worker threads for fitness evaluation.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    /// The grid in the config's `evaluate.phase`.
    Config,
    #[value(name = "phase-1")]
    One,
    #[value(name = "phase-2")]
    Two,
    /// Skip the scenario grid.
    None,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    policy: String,
    #[arg(long, value_enum, default_value = "config")]
    phase: PhaseArg,
    /// Held-out experience CSV for behavioural-cloning fitness.
    #[arg(long)]
    holdout: Option<PathBuf>,
    /// Overrides the phase duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Contour,
    CosineSpan,
    Response,
    All,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    policy: String,
    #[arg(long, value_enum, default_value = "all")]
    figure: Figure,
}

/// Bad config, bad flag or missing input. Exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SYMCC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Collect(a) => commands::collect(a),
        Command::Regress(a) => commands::regress(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Analyze(a) => commands::analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
