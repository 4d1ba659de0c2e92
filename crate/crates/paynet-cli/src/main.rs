use clap::{Parser, Subcommand};
use paynet_cli::commands::{
    self, AllocateArgs, CostArgs, ExperimentArgs, GameArgs, GenDemandArgs, HubArgs, RunContext,
    SimulateArgs, TreeOptArgs,
};
use paynet_cli::{CliError, RunStatus};
use std::path::PathBuf;
use std::process::ExitCode;

/// Design, price, and simulate off-chain payment networks.
#[derive(Debug, Parser)]
#[command(name = "paynet", version = env!("BUILD_VERSION"))]
struct Cli {
    /// Master random seed; every derived stream is a pure function of it
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for outputs and the run manifest
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// JSON config file; explicit flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for parallel runs (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a scale-free demand matrix
    GenDemand(GenDemandArgs),
    /// Compute the cheapest spanning tree for a demand matrix
    TreeOpt(TreeOptArgs),
    /// Rank star centers by maintenance cost
    Hub(HubArgs),
    /// Split a liquidity budget optimally across a tree
    Allocate(AllocateArgs),
    /// Price a tree network at chosen or optimal liquidity
    Cost(CostArgs),
    /// Simulate transfer traffic and estimate reset rates
    Simulate(SimulateArgs),
    /// Run best-response channel rewiring
    Game(GameArgs),
    /// Run a named batch experiment
    Experiment(ExperimentArgs),
}

fn run(cli: &Cli) -> Result<RunStatus, CliError> {
    let ctx = RunContext::new(cli.seed, cli.out.clone(), cli.config.clone());
    match &cli.command {
        Command::GenDemand(args) => commands::gen_demand(&ctx, args),
        Command::TreeOpt(args) => commands::tree_opt(&ctx, args),
        Command::Hub(args) => commands::hub(&ctx, args),
        Command::Allocate(args) => commands::allocate(&ctx, args),
        Command::Cost(args) => commands::cost(&ctx, args),
        Command::Simulate(args) => commands::simulate_cmd(&ctx, args),
        Command::Game(args) => commands::game(&ctx, args),
        Command::Experiment(args) => commands::experiment(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: setting up {threads} worker threads: {err}");
            return ExitCode::from(4);
        }
    }
    match run(&cli) {
        Ok(RunStatus::Success) => ExitCode::SUCCESS,
        Ok(RunStatus::Flagged(reason)) => {
            eprintln!("flagged: {reason}");
            ExitCode::from(3)
        }
        Err(CliError::Validation(msg)) => {
            eprintln!("error: invalid input: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(4)
        }
    }
}
