//! `elm`: evolve walker programs, inspect runs, distill datasets, and run
//! the bug-fixing benchmark.
//!
//! Exit codes: 0 success, 2 bad configuration or arguments, 3 runtime
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;
mod run;
mod svg;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "elm", version, about = "Quality-diversity evolution of walker programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start a run from a config file.
    Run {
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker processes, overriding the config.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Continue a run from one of its snapshots.
    Resume {
        snapshot: PathBuf,
        /// Further iterations to run.
        #[arg(long, default_value_t = 0)]
        iterations: u64,
        /// Config to continue with; defaults to the copy saved with the run.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Simulate one walker (walker text or a program) and print its fitness.
    Simulate {
        walker: PathBuf,
        #[arg(long, default_value = "flat")]
        terrain: String,
        /// Take terrain dimensions and physics from a run config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the center-of-mass path as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Write an SVG of the terrain and the first and last frames.
        #[arg(long)]
        dump_svg: Option<PathBuf>,
    },
    /// Build a training dataset from finished run archives.
    Distill {
        #[arg(required = true)]
        archives: Vec<PathBuf>,
        /// threshold or final
        #[arg(long, default_value = "threshold")]
        method: String,
        /// Keep programs with at least this fraction of their niche's best fitness.
        #[arg(long, default_value_t = 0.5)]
        pct: f64,
        #[arg(long)]
        out: PathBuf,
        /// Drop examples from runs started from this seed (repeatable).
        #[arg(long)]
        exclude_seed: Vec<String>,
        /// Keep one copy of programs found by several runs in the same niche.
        #[arg(long)]
        dedupe: bool,
        /// Move this fraction into a separate `.holdout.jsonl` file.
        #[arg(long)]
        holdout_fraction: Option<f64>,
        #[arg(long, default_value_t = 0)]
        holdout_seed: u64,
        /// Write dataset statistics as CSV.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Single-step repair success rates on the parity and quadratic tasks.
    Bench {
        /// four_parity or quadratic
        #[arg(long)]
        task: String,
        /// node_mutation, prompt, or diff
        #[arg(long, default_value = "node_mutation")]
        operator: String,
        /// Bug counts: N or A..B
        #[arg(long, default_value = "1..2")]
        k: String,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Per-node mutation rate; tuned on the one-bug case if omitted.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add the exact node-mutation success probability.
        #[arg(long)]
        oracle: bool,
        /// Run config whose [llm] section configures the model operators.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render champion fitness over a 2D slice of a run's map as SVG.
    MapRender {
        snapshot: PathBuf,
        /// Two axes, e.g. height-width.
        #[arg(long, default_value = "height-width")]
        slice: String,
        /// Bin of the third axis; the best over it if omitted.
        #[arg(long)]
        at: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the built-in program interpreter over the worker protocol.
    Worker,
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out, jobs } => run::cmd_run(&config, out, jobs),
        Command::Resume { snapshot, iterations, config, jobs } => run::cmd_resume(&snapshot, iterations, config, jobs),
        Command::Simulate { walker, terrain, config, trajectory, dump_svg } => {
            commands::cmd_simulate(commands::SimulateArgs { walker, terrain, config, trajectory, dump_svg })
        }
        Command::Distill { archives, method, pct, out, exclude_seed, dedupe, holdout_fraction, holdout_seed, stats } => {
            commands::cmd_distill(commands::DistillArgs {
                archives,
                method,
                pct,
                out,
                exclude_seed,
                dedupe,
                holdout_fraction,
                holdout_seed,
                stats,
            })
        }
        Command::Bench { task, operator, k, trials, rate, seed, oracle, config, out } => {
            commands::cmd_bench(commands::BenchArgs { task, operator, k, trials, rate, seed, oracle, config, out })
        }
        Command::MapRender { snapshot, slice, at, out } => commands::cmd_map_render(&snapshot, &slice, at, &out),
        Command::Worker => commands::cmd_worker(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("elm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
