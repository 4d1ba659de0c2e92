//! Subcommand implementations. Every command resolves its parameters from
//! defaults, then an optional `--config` JSON file, then explicit flags
//! (strongest last), runs, writes its outputs plus a manifest under the
//! output directory, and prints a short summary to stdout.

use crate::experiments::ExperimentSpec;
use crate::io::{
    self, derive_seed, even_allocation, read_demand_csv, read_tree_csv, write_allocation_csv,
    write_demand_csv, write_manifest, write_tree_csv, Manifest,
};
use crate::{CliError, RunStatus};
use anyhow::Context;
use clap::Args;
use paynet::game::{best_response_dynamics, is_equilibrium, DynamicsOutcome, GameState};
use paynet::genesis::{self, GenesisConfig};
use paynet::net::{CostParams, DemandMatrix, Topology};
use paynet::routing::{edge_rates, hub_routing, tree_rates_by_cuts, tree_routing};
use paynet::sim::{estimate_rps, simulate, Horizon, SimConfig};
use paynet::{
    maintenance_cost, network_rps, optimal_allocation, optimal_spanning_tree,
    optimal_total_liquidity, unit_rps, Network,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Shared context resolved from the global flags.
pub struct RunContext {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub config: Option<PathBuf>,
    explicit_seed: Option<u64>,
    started: Instant,
}

impl RunContext {
    pub fn new(seed: Option<u64>, out_dir: PathBuf, config: Option<PathBuf>) -> Self {
        RunContext {
            seed: seed.unwrap_or(0),
            out_dir,
            config,
            explicit_seed: seed,
            started: Instant::now(),
        }
    }

    fn seed_explicit(&self) -> Option<u64> {
        self.explicit_seed
    }

    fn prepare_out_dir(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))
            .map_err(CliError::Internal)
    }

    fn finish(
        &self,
        command: &str,
        resolved: serde_json::Value,
        outputs: Vec<String>,
    ) -> Result<(), CliError> {
        let manifest = Manifest {
            spec: json!({ "command": command, "parameters": resolved }),
            seed: self.seed,
            version: io::version_string(),
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            outputs,
        };
        write_manifest(&self.out_dir, &manifest).map_err(CliError::Internal)?;
        Ok(())
    }
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(|e| CliError::Validation(format!("{e:#}")))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
        }
    }
}

fn invalid(err: impl std::fmt::Display) -> CliError {
    CliError::Validation(err.to_string())
}

fn internal(err: impl Into<anyhow::Error>) -> CliError {
    CliError::Internal(err.into())
}

fn read_demand(path: &Path) -> Result<DemandMatrix, CliError> {
    read_demand_csv(path).map_err(|e| CliError::Validation(format!("{e:#}")))
}

/// Generate a power-law demand matrix and write it as CSV.
#[derive(Debug, Args)]
pub struct GenDemandArgs {
    /// Number of agents
    #[arg(long)]
    pub agents: Option<usize>,
    /// Tail exponent of the transacting-partner count distribution
    #[arg(long)]
    pub degree_exponent: Option<f64>,
    /// Tail exponent of the per-pair rate distribution
    #[arg(long)]
    pub rate_exponent: Option<f64>,
    /// Smallest per-pair rate
    #[arg(long)]
    pub rate_min: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenDemandConfig {
    agents: usize,
    degree_exponent: f64,
    rate_exponent: f64,
    rate_min: f64,
}

impl Default for GenDemandConfig {
    fn default() -> Self {
        GenDemandConfig {
            agents: 100,
            degree_exponent: 2.5,
            rate_exponent: 2.5,
            rate_min: 0.5,
        }
    }
}

pub fn gen_demand(ctx: &RunContext, args: &GenDemandArgs) -> Result<RunStatus, CliError> {
    let mut cfg: GenDemandConfig = load_config(ctx.config.as_deref())?;
    if let Some(v) = args.agents {
        cfg.agents = v;
    }
    if let Some(v) = args.degree_exponent {
        cfg.degree_exponent = v;
    }
    if let Some(v) = args.rate_exponent {
        cfg.rate_exponent = v;
    }
    if let Some(v) = args.rate_min {
        cfg.rate_min = v;
    }
    let genesis_config = GenesisConfig {
        n: cfg.agents,
        degree_exponent: cfg.degree_exponent,
        rate_exponent: cfg.rate_exponent,
        rate_min: cfg.rate_min,
        seed: ctx.seed,
    };
    let demand = genesis::generate(&genesis_config).map_err(invalid)?;
    ctx.prepare_out_dir()?;
    let path = ctx.out_dir.join("demand.csv");
    write_demand_csv(&path, &demand).map_err(CliError::Internal)?;
    println!(
        "wrote {} ({} agents, {} pairs, total rate {:.4})",
        path.display(),
        demand.n(),
        demand.pairs().len(),
        demand.total_pair_rate(),
    );
    ctx.finish(
        "gen-demand",
        serde_json::to_value(&cfg).map_err(internal)?,
        vec!["demand.csv".into()],
    )?;
    Ok(RunStatus::Success)
}

/// Compute the optimal spanning tree for a demand file.
#[derive(Debug, Args)]
pub struct TreeOptArgs {
    /// Demand CSV (see gen-demand output)
    #[arg(long)]
    pub demand: Option<PathBuf>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TreeOptConfig {
    demand: Option<PathBuf>,
}

pub fn tree_opt(ctx: &RunContext, args: &TreeOptArgs) -> Result<RunStatus, CliError> {
    let mut cfg: TreeOptConfig = load_config(ctx.config.as_deref())?;
    if let Some(p) = &args.demand {
        cfg.demand = Some(p.clone());
    }
    let demand_path = cfg
        .demand
        .as_deref()
        .ok_or_else(|| invalid("--demand is required"))?;
    let demand = read_demand(demand_path)?;
    let tree = optimal_spanning_tree(&demand).map_err(internal)?;
    let rates = tree_rates_by_cuts(&tree, &demand).map_err(internal)?;
    ctx.prepare_out_dir()?;
    let path = ctx.out_dir.join("tree.csv");
    write_tree_csv(&path, &rates).map_err(CliError::Internal)?;
    println!(
        "wrote {} (objective {:.6}, unit-liquidity reset rate {:.6})",
        path.display(),
        rates.cbrt_sum(),
        unit_rps(&rates),
    );
    ctx.finish(
        "tree-opt",
        json!({ "demand": demand_path }),
        vec!["tree.csv".into()],
    )?;
    Ok(RunStatus::Success)
}

/// Rank hub centers by maintenance cost at each center's own optimal
/// liquidity.
#[derive(Debug, Args)]
pub struct HubArgs {
    /// Demand CSV
    #[arg(long)]
    pub demand: Option<PathBuf>,
    /// Interest per coin per second
    #[arg(long)]
    pub interest_rate: Option<f64>,
    /// Ledger fee per reset
    #[arg(long)]
    pub record_fee: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HubConfig {
    demand: Option<PathBuf>,
    interest_rate: f64,
    record_fee: f64,
}

impl Default for HubConfig {
    fn default() -> Self {
        HubConfig {
            demand: None,
            interest_rate: 0.05,
            record_fee: 1.0,
        }
    }
}

pub fn hub(ctx: &RunContext, args: &HubArgs) -> Result<RunStatus, CliError> {
    let mut cfg: HubConfig = load_config(ctx.config.as_deref())?;
    if let Some(p) = &args.demand {
        cfg.demand = Some(p.clone());
    }
    if let Some(v) = args.interest_rate {
        cfg.interest_rate = v;
    }
    if let Some(v) = args.record_fee {
        cfg.record_fee = v;
    }
    let demand_path = cfg
        .demand
        .as_deref()
        .ok_or_else(|| invalid("--demand is required"))?;
    let demand = read_demand(demand_path)?;
    let params = CostParams::new(cfg.interest_rate, cfg.record_fee).map_err(invalid)?;

    let n = demand.n();
    let mut table = String::from("center,w_opt,rps,liquidity_cost,record_cost,total\n");
    let mut best: Option<(usize, f64, paynet::NetworkCost)> = None;
    for center in 0..n {
        let star = Topology::star(n, center).map_err(internal)?;
        let policy = hub_routing(n, center).map_err(internal)?;
        let rates = edge_rates(&star, &policy, &demand).map_err(internal)?;
        let (w_opt, cost) = optimal_total_liquidity(&rates, &params).map_err(internal)?;
        table.push_str(&format!(
            "{center},{w_opt},{},{},{},{}\n",
            cost.rps, cost.liquidity_cost, cost.record_cost, cost.total,
        ));
        if best.as_ref().is_none_or(|(_, _, b)| cost.total < b.total) {
            best = Some((center, w_opt, cost));
        }
    }
    let (center, w_opt, cost) = best.expect("demand has at least two agents");
    ctx.prepare_out_dir()?;
    let table_path = ctx.out_dir.join("hub_centers.csv");
    fs::write(&table_path, table)
        .with_context(|| format!("writing {}", table_path.display()))
        .map_err(CliError::Internal)?;
    let best_path = ctx.out_dir.join("hub.json");
    let mut best_json = serde_json::to_string_pretty(&json!({
        "center": center,
        "w_opt": w_opt,
        "cost": cost,
    }))
    .map_err(internal)?;
    best_json.push('\n');
    fs::write(&best_path, best_json)
        .with_context(|| format!("writing {}", best_path.display()))
        .map_err(CliError::Internal)?;
    println!(
        "best hub center {center}: liquidity {w_opt:.4}, cost {:.6} per second",
        cost.total,
    );
    ctx.finish(
        "hub",
        json!({
            "demand": demand_path,
            "interest_rate": cfg.interest_rate,
            "record_fee": cfg.record_fee,
        }),
        vec!["hub_centers.csv".into(), "hub.json".into()],
    )?;
    Ok(RunStatus::Success)
}

/// Split a liquidity budget across a tree's channels.
#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// Demand CSV
    #[arg(long)]
    pub demand: Option<PathBuf>,
    /// Total coins to lock up
    #[arg(long)]
    pub liquidity: Option<f64>,
    /// Tree CSV to allocate over (default: compute the optimal tree)
    #[arg(long)]
    pub tree: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AllocateConfig {
    demand: Option<PathBuf>,
    liquidity: f64,
    tree: Option<PathBuf>,
}

impl Default for AllocateConfig {
    fn default() -> Self {
        AllocateConfig {
            demand: None,
            liquidity: 100.0,
            tree: None,
        }
    }
}

fn resolve_tree(demand: &DemandMatrix, tree_path: Option<&Path>) -> Result<Topology, CliError> {
    match tree_path {
        Some(p) => {
            let tree =
                read_tree_csv(p, demand.n()).map_err(|e| CliError::Validation(format!("{e:#}")))?;
            if !tree.is_spanning_tree() {
                return Err(invalid(format!("{}: not a spanning tree", p.display())));
            }
            Ok(tree)
        }
        None => optimal_spanning_tree(demand).map_err(internal),
    }
}

pub fn allocate(ctx: &RunContext, args: &AllocateArgs) -> Result<RunStatus, CliError> {
    let mut cfg: AllocateConfig = load_config(ctx.config.as_deref())?;
    if let Some(p) = &args.demand {
        cfg.demand = Some(p.clone());
    }
    if let Some(v) = args.liquidity {
        cfg.liquidity = v;
    }
    if let Some(p) = &args.tree {
        cfg.tree = Some(p.clone());
    }
    let demand_path = cfg
        .demand
        .as_deref()
        .ok_or_else(|| invalid("--demand is required"))?;
    let demand = read_demand(demand_path)?;
    let tree = resolve_tree(&demand, cfg.tree.as_deref())?;
    let rates = tree_rates_by_cuts(&tree, &demand).map_err(internal)?;
    let alloc = optimal_allocation(&rates, cfg.liquidity).map_err(invalid)?;
    let rps = network_rps(&rates, &alloc).map_err(internal)?;
    ctx.prepare_out_dir()?;
    let path = ctx.out_dir.join("allocation.csv");
    write_allocation_csv(&path, &rates, &alloc).map_err(CliError::Internal)?;
    println!(
        "wrote {} (total {:.4}, analytic reset rate {:.6})",
        path.display(),
        alloc.total(),
        rps,
    );
    ctx.finish(
        "allocate",
        json!({
            "demand": demand_path,
            "liquidity": cfg.liquidity,
            "tree": cfg.tree,
        }),
        vec!["allocation.csv".into()],
    )?;
    Ok(RunStatus::Success)
}

/// Price a network at a chosen or optimal liquidity level.
#[derive(Debug, Args)]
pub struct CostArgs {
    /// Demand CSV
    #[arg(long)]
    pub demand: Option<PathBuf>,
    /// Interest per coin per second
    #[arg(long)]
    pub interest_rate: Option<f64>,
    /// Ledger fee per reset
    #[arg(long)]
    pub record_fee: Option<f64>,
    /// Price at this liquidity instead of the optimum
    #[arg(long)]
    pub liquidity: Option<f64>,
    /// Tree CSV (default: compute the optimal tree)
    #[arg(long)]
    pub tree: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CostConfig {
    demand: Option<PathBuf>,
    interest_rate: f64,
    record_fee: f64,
    liquidity: Option<f64>,
    tree: Option<PathBuf>,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            demand: None,
            interest_rate: 0.05,
            record_fee: 1.0,
            liquidity: None,
            tree: None,
        }
    }
}

pub fn cost(ctx: &RunContext, args: &CostArgs) -> Result<RunStatus, CliError> {
    let mut cfg: CostConfig = load_config(ctx.config.as_deref())?;
    if let Some(p) = &args.demand {
        cfg.demand = Some(p.clone());
    }
    if let Some(v) = args.interest_rate {
        cfg.interest_rate = v;
    }
    if let Some(v) = args.record_fee {
        cfg.record_fee = v;
    }
    if let Some(v) = args.liquidity {
        cfg.liquidity = Some(v);
    }
    if let Some(p) = &args.tree {
        cfg.tree = Some(p.clone());
    }
    let demand_path = cfg
        .demand
        .as_deref()
        .ok_or_else(|| invalid("--demand is required"))?;
    let demand = read_demand(demand_path)?;
    let params = CostParams::new(cfg.interest_rate, cfg.record_fee).map_err(invalid)?;
    let tree = resolve_tree(&demand, cfg.tree.as_deref())?;
    let rates = tree_rates_by_cuts(&tree, &demand).map_err(internal)?;
    let (liquidity, breakdown, at_optimum) = match cfg.liquidity {
        Some(w) => {
            let breakdown = maintenance_cost(&rates, w, &params).map_err(invalid)?;
            (w, breakdown, false)
        }
        None => {
            let (w, breakdown) = optimal_total_liquidity(&rates, &params).map_err(invalid)?;
            (w, breakdown, true)
        }
    };
    ctx.prepare_out_dir()?;
    let path = ctx.out_dir.join("cost.json");
    let mut body = serde_json::to_string_pretty(&json!({
        "liquidity": liquidity,
        "at_optimum": at_optimum,
        "unit_rps": unit_rps(&rates),
        "cost": breakdown,
    }))
    .map_err(internal)?;
    body.push('\n');
    fs::write(&path, body)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Internal)?;
    println!(
        "liquidity {liquidity:.4}: {:.6} per second ({} optimum)",
        breakdown.total,
        if at_optimum { "at" } else { "off" },
    );
    ctx.finish(
        "cost",
        serde_json::to_value(&cfg).map_err(internal)?,
        vec!["cost.json".into()],
    )?;
    Ok(RunStatus::Success)
}

/// Simulate a provisioned network and estimate reset rates.
#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Demand CSV
    #[arg(long)]
    pub demand: Option<PathBuf>,
    /// Total coins to lock up (rounded to even integers per channel)
    #[arg(long)]
    pub liquidity: Option<f64>,
    /// Tree CSV (default: compute the optimal tree)
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Stop after this much simulated time
    #[arg(long, conflicts_with = "resets")]
    pub time: Option<f64>,
    /// Stop after this many resets
    #[arg(long)]
    pub resets: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulateConfig {
    demand: Option<PathBuf>,
    liquidity: f64,
    tree: Option<PathBuf>,
    time: Option<f64>,
    resets: Option<u64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            demand: None,
            liquidity: 100.0,
            tree: None,
            time: None,
            resets: None,
        }
    }
}

pub fn simulate_cmd(ctx: &RunContext, args: &SimulateArgs) -> Result<RunStatus, CliError> {
    let mut cfg: SimulateConfig = load_config(ctx.config.as_deref())?;
    if let Some(p) = &args.demand {
        cfg.demand = Some(p.clone());
    }
    if let Some(v) = args.liquidity {
        cfg.liquidity = v;
    }
    if let Some(p) = &args.tree {
        cfg.tree = Some(p.clone());
    }
    if let Some(v) = args.time {
        cfg.time = Some(v);
        cfg.resets = None;
    }
    if let Some(v) = args.resets {
        cfg.resets = Some(v);
        cfg.time = None;
    }
    let demand_path = cfg
        .demand
        .as_deref()
        .ok_or_else(|| invalid("--demand is required"))?;
    let horizon = match (cfg.time, cfg.resets) {
        (Some(t), None) => Horizon::Time(t),
        (None, Some(k)) => Horizon::Resets(k),
        (None, None) => return Err(invalid("one of --time or --resets is required")),
        (Some(_), Some(_)) => return Err(invalid("--time and --resets are mutually exclusive")),
    };
    let demand = read_demand(demand_path)?;
    let tree = resolve_tree(&demand, cfg.tree.as_deref())?;
    let rates = tree_rates_by_cuts(&tree, &demand).map_err(internal)?;
    let exact = optimal_allocation(&rates, cfg.liquidity).map_err(invalid)?;
    let alloc = even_allocation(&exact).map_err(CliError::Internal)?;
    let realized = alloc.total();
    let policy = tree_routing(&tree, &demand).map_err(internal)?;
    let network = Network::new(tree, alloc).map_err(internal)?;
    let result = simulate(&SimConfig {
        network,
        policy,
        demand,
        horizon,
        seed: ctx.seed,
    })
    .map_err(invalid)?;
    let estimate = estimate_rps(&result);
    ctx.prepare_out_dir()?;
    let resets_path = ctx.out_dir.join("resets.csv");
    let mut buffer = Vec::new();
    result.write_csv(&mut buffer).map_err(internal)?;
    fs::write(&resets_path, buffer)
        .with_context(|| format!("writing {}", resets_path.display()))
        .map_err(CliError::Internal)?;
    let rps_path = ctx.out_dir.join("rps.json");
    let mut body = serde_json::to_string_pretty(&json!({
        "requested_liquidity": cfg.liquidity,
        "realized_liquidity": realized,
        "elapsed": result.elapsed(),
        "transfers": result.transfers(),
        "total_resets": result.total_resets(),
        "estimate": estimate,
    }))
    .map_err(internal)?;
    body.push('\n');
    fs::write(&rps_path, body)
        .with_context(|| format!("writing {}", rps_path.display()))
        .map_err(CliError::Internal)?;
    println!(
        "simulated {:.2}s: {} transfers, {} resets, reset rate {:.6} (95% half-width {:.6})",
        result.elapsed(),
        result.transfers(),
        result.total_resets(),
        estimate.total_rps,
        estimate.half_width,
    );
    ctx.finish(
        "simulate",
        serde_json::to_value(&cfg).map_err(internal)?,
        vec!["resets.csv".into(), "rps.json".into()],
    )?;
    Ok(RunStatus::Success)
}

/// Run best-response rewiring from an initial tree.
#[derive(Debug, Args)]
pub struct GameArgs {
    /// Demand CSV
    #[arg(long)]
    pub demand: Option<PathBuf>,
    /// Round budget
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Start from the optimal tree instead of a seeded random tree
    #[arg(long)]
    pub from_optimal: bool,
    /// Interest per coin per second
    #[arg(long)]
    pub interest_rate: Option<f64>,
    /// Ledger fee per reset
    #[arg(long)]
    pub record_fee: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GameConfig {
    demand: Option<PathBuf>,
    max_rounds: usize,
    from_optimal: bool,
    interest_rate: f64,
    record_fee: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            demand: None,
            max_rounds: 200,
            from_optimal: false,
            interest_rate: 0.05,
            record_fee: 1.0,
        }
    }
}

pub fn game(ctx: &RunContext, args: &GameArgs) -> Result<RunStatus, CliError> {
    let mut cfg: GameConfig = load_config(ctx.config.as_deref())?;
    if let Some(p) = &args.demand {
        cfg.demand = Some(p.clone());
    }
    if let Some(v) = args.max_rounds {
        cfg.max_rounds = v;
    }
    if args.from_optimal {
        cfg.from_optimal = true;
    }
    if let Some(v) = args.interest_rate {
        cfg.interest_rate = v;
    }
    if let Some(v) = args.record_fee {
        cfg.record_fee = v;
    }
    let demand_path = cfg
        .demand
        .as_deref()
        .ok_or_else(|| invalid("--demand is required"))?;
    let demand = read_demand(demand_path)?;
    let params = CostParams::new(cfg.interest_rate, cfg.record_fee).map_err(invalid)?;
    let n = demand.n();
    let initial = if cfg.from_optimal {
        optimal_spanning_tree(&demand).map_err(internal)?
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed, &[0]));
        let code: Vec<usize> = (0..n.saturating_sub(2))
            .map(|_| rng.gen_range(0..n))
            .collect();
        Topology::from_tree_code(n, &code).map_err(internal)?
    };
    let state = GameState::new(initial, demand, params).map_err(invalid)?;
    let initial_cost = state.total_cost();
    let order: Vec<usize> = (0..n).collect();
    let result = best_response_dynamics(state, cfg.max_rounds, &order).map_err(internal)?;
    ctx.prepare_out_dir()?;
    let history_path = ctx.out_dir.join("game_history.jsonl");
    let mut lines = String::new();
    for entry in &result.history {
        lines.push_str(&serde_json::to_string(entry).map_err(internal)?);
        lines.push('\n');
    }
    fs::write(&history_path, lines)
        .with_context(|| format!("writing {}", history_path.display()))
        .map_err(CliError::Internal)?;
    let outcome = match result.outcome {
        DynamicsOutcome::Converged => "converged",
        DynamicsOutcome::Cycled => "cycled",
        DynamicsOutcome::RoundLimit => "round-limit",
    };
    let result_path = ctx.out_dir.join("game_result.json");
    let mut body = serde_json::to_string_pretty(&json!({
        "outcome": outcome,
        "moves": result.history.len(),
        "initial_cost": initial_cost,
        "final_cost": result.state.total_cost(),
        "equilibrium": is_equilibrium(&result.state),
        "final_tree": io::edge_list_string(result.state.tree()),
    }))
    .map_err(internal)?;
    body.push('\n');
    fs::write(&result_path, body)
        .with_context(|| format!("writing {}", result_path.display()))
        .map_err(CliError::Internal)?;
    println!(
        "{outcome} after {} moves: cost {:.6} -> {:.6}",
        result.history.len(),
        initial_cost,
        result.state.total_cost(),
    );
    ctx.finish(
        "game",
        serde_json::to_value(&cfg).map_err(internal)?,
        vec!["game_history.jsonl".into(), "game_result.json".into()],
    )?;
    match result.outcome {
        DynamicsOutcome::Converged => Ok(RunStatus::Success),
        DynamicsOutcome::Cycled => Ok(RunStatus::Flagged("play cycled without settling".into())),
        DynamicsOutcome::RoundLimit => Ok(RunStatus::Flagged(
            "round budget ran out before convergence".into(),
        )),
    }
}

/// Run a batch experiment described by --kind or a config/manifest file.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment kind (compare-topologies, hub-bound-replay,
    /// tightness-matching, poa-sweep, lifetime-validation, game-dynamics)
    #[arg(long)]
    pub kind: Option<String>,
}

pub fn experiment(ctx: &RunContext, args: &ExperimentArgs) -> Result<RunStatus, CliError> {
    let (spec, manifest_seed) = match ctx.config.as_deref() {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(|e| CliError::Validation(format!("{e:#}")))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            // A manifest wraps the spec it ran; accept either form so a
            // rerun is `experiment --config manifest.json`.
            let (spec_value, seed) = if value.get("spec").is_some() {
                let manifest: Manifest = serde_json::from_value(value)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                let inner = manifest
                    .spec
                    .get("parameters")
                    .cloned()
                    .unwrap_or(manifest.spec.clone());
                (inner, Some(manifest.seed))
            } else {
                (value, None)
            };
            let spec: ExperimentSpec = serde_json::from_value(spec_value)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            (spec, seed)
        }
        None => {
            let kind = args
                .kind
                .as_deref()
                .ok_or_else(|| invalid("either --kind or --config is required"))?;
            let spec = ExperimentSpec::from_kind(kind)
                .ok_or_else(|| invalid(format!("unknown experiment kind {kind}")))?;
            (spec, None)
        }
    };
    if let (Some(kind), Some(path)) = (args.kind.as_deref(), ctx.config.as_deref()) {
        if kind != spec.kind_name() {
            return Err(invalid(format!(
                "--kind {kind} conflicts with {} in {}",
                spec.kind_name(),
                path.display(),
            )));
        }
    }
    spec.validate()
        .map_err(|e| CliError::Validation(format!("{e:#}")))?;
    // Precedence: manifest seed (to reproduce a run), unless the flag
    // overrides it explicitly.
    let seed = match (ctx.seed_explicit(), manifest_seed) {
        (Some(flag), _) => flag,
        (None, Some(from_manifest)) => from_manifest,
        (None, None) => 0,
    };
    ctx.prepare_out_dir()?;
    let started = Instant::now();
    let report = spec.run(seed, &ctx.out_dir).map_err(CliError::Internal)?;
    let manifest = Manifest {
        spec: serde_json::to_value(&spec).map_err(internal)?,
        seed,
        version: io::version_string(),
        wall_time_secs: started.elapsed().as_secs_f64(),
        outputs: report.outputs.clone(),
    };
    write_manifest(&ctx.out_dir, &manifest).map_err(CliError::Internal)?;
    for line in &report.summary {
        println!("{line}");
    }
    println!(
        "wrote {} under {}",
        report.outputs.join(", "),
        ctx.out_dir.display(),
    );
    if report.flagged.is_empty() {
        Ok(RunStatus::Success)
    } else {
        for item in &report.flagged {
            eprintln!("flagged: {item}");
        }
        Ok(RunStatus::Flagged(format!(
            "{} property check(s) failed",
            report.flagged.len(),
        )))
    }
}
