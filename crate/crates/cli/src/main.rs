mod commands;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ncpart::partition::Method;

/// Partition dynamical networks and compare non-centralized MPC schemes.
#[derive(Parser, Debug)]
#[command(name = "ncpart", version)]
struct Cli {
    /// Caps the worker threads used for coalition solves.
    #[arg(long, global = true, env = "NCPART_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print graph statistics or write the network in file form.
    Graph(GraphArgs),
    /// Partition a network and write the partition file.
    Partition(PartitionArgs),
    /// Closed-loop evaluation of partitions against centralized MPC.
    Evaluate(EvaluateArgs),
    /// Evaluate a family of partitions and emit plot-ready columns.
    Sweep(SweepArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
enum GraphAction {
    #[default]
    Stats,
    Build,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[arg(value_enum, default_value_t)]
    action: GraphAction,
    /// Network file or generator: modular64, random-benchmark, random:n,density,seed.
    #[arg(long)]
    network: String,
    /// Output file for `build`; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct MethodArgs {
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Granularity weight; several values give several partitions.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Minimum modularity gain for a split.
    #[arg(long, default_value_t = 1e-12)]
    min_gain: f64,
    /// Use |w| rather than 0/1 adjacency for modularity.
    #[arg(long)]
    weighted: bool,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[arg(long)]
    network: String,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Partition file to write; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SimArgs {
    #[arg(long, default_value_t = 2)]
    horizon: usize,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    /// Seeds the initial state and the local-search scan order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Solve coalitions one after another.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    network: String,
    /// Partition files to evaluate.
    #[arg(long = "partition")]
    partitions: Vec<PathBuf>,
    /// Also evaluate partitions computed by a method at each --alpha.
    #[command(flatten)]
    method: MethodArgs,
    #[command(flatten)]
    sim: SimArgs,
    /// Output directory for the report and per-run logs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    network: String,
    #[command(flatten)]
    method: MethodArgs,
    /// Every partition of the network instead of a method sweep.
    #[arg(long, conflicts_with = "method")]
    all_partitions: bool,
    #[command(flatten)]
    sim: SimArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Graph(a) => commands::graph(a),
        Command::Partition(a) => commands::partition(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
