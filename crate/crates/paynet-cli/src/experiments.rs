//! Batch experiments: each kind has a parameter struct with defaults, a
//! runner that fans trials out over a worker pool with per-trial seeds
//! derived from the master seed, and a writer that emits fixed-schema CSV.
//! Rows are sorted by trial index before writing so reruns with the same
//! seed produce byte-identical files no matter how threads interleave.

use crate::io::derive_seed;
use anyhow::{anyhow, Context, Result};
use paynet::game::{
    best_response_dynamics, is_equilibrium, poa_instance, DynamicsOutcome, GameState,
};
use paynet::genesis::{self, GenesisConfig};
use paynet::hubs::{build_hub, replay, replay_hub, TransactionTrace, Transfer};
use paynet::net::{CostParams, DemandMatrix, Edge, LiquidityAllocation, Network, Topology};
use paynet::routing::{
    direct_routing, edge_rates, hub_routing, shortest_path_routing, tree_rates_by_cuts,
    tree_routing, EdgeRates,
};
use paynet::sim::{simulate, Horizon, SimConfig};
use paynet::{optimal_spanning_tree, optimal_total_liquidity, unit_rps};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// One experiment request, as parsed from `--config` JSON or built from
/// `--kind` with defaults. The `kind` tag selects the variant; omitted
/// fields take the documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentSpec {
    CompareTopologies(CompareTopologiesSpec),
    HubBoundReplay(HubBoundReplaySpec),
    TightnessMatching(TightnessMatchingSpec),
    PoaSweep(PoaSweepSpec),
    LifetimeValidation(LifetimeValidationSpec),
    GameDynamics(GameDynamicsSpec),
}

/// Sweep the demand generator's degree exponent and compare reset rates of
/// three designs at unit liquidity: the optimal spanning tree, the best
/// single hub, and direct channels for every demanded pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareTopologiesSpec {
    pub n: usize,
    pub exponent_min: f64,
    pub exponent_max: f64,
    pub exponent_step: f64,
    pub rate_exponent: f64,
    pub rate_min: f64,
    pub trials: usize,
}

impl Default for CompareTopologiesSpec {
    fn default() -> Self {
        CompareTopologiesSpec {
            n: 100,
            exponent_min: 2.0,
            exponent_max: 3.0,
            exponent_step: 0.1,
            rate_exponent: 2.5,
            rate_min: 0.5,
            trials: 50,
        }
    }
}

/// Replay random transfer traces through every possible hub and check the
/// reset and liquidity doubling bounds trial by trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HubBoundReplaySpec {
    pub instances: usize,
    pub max_agents: usize,
    pub trace_length: usize,
}

impl Default for HubBoundReplaySpec {
    fn default() -> Self {
        HubBoundReplaySpec {
            instances: 1000,
            max_agents: 10,
            trace_length: 10_000,
        }
    }
}

/// Disjoint transacting pairs: the family where every hub costs almost
/// twice the optimal design. Closed-form, no simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TightnessMatchingSpec {
    pub max_pairs: usize,
}

impl Default for TightnessMatchingSpec {
    fn default() -> Self {
        TightnessMatchingSpec { max_pairs: 50 }
    }
}

/// Chain equilibria whose total cost outgrows the optimal tree linearly in
/// the number of agents.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoaSweepSpec {
    pub k_max: usize,
}

impl Default for PoaSweepSpec {
    fn default() -> Self {
        PoaSweepSpec { k_max: 100 }
    }
}

/// Simulate single channels across a liquidity-by-rate grid and compare
/// mean lifetimes to the quadratic law.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifetimeValidationSpec {
    pub omegas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub target_resets: u64,
}

impl Default for LifetimeValidationSpec {
    fn default() -> Self {
        LifetimeValidationSpec {
            omegas: vec![4.0, 8.0, 16.0],
            lambdas: vec![0.5, 1.0, 4.0],
            target_resets: 100_000,
        }
    }
}

/// Run best-response play from random trees and record how often and where
/// it settles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameDynamicsSpec {
    pub n: usize,
    pub instances: usize,
    pub max_rounds: usize,
}

impl Default for GameDynamicsSpec {
    fn default() -> Self {
        GameDynamicsSpec {
            n: 8,
            instances: 20,
            max_rounds: 200,
        }
    }
}

impl ExperimentSpec {
    pub fn from_kind(kind: &str) -> Option<ExperimentSpec> {
        Some(match kind {
            "compare-topologies" => {
                ExperimentSpec::CompareTopologies(CompareTopologiesSpec::default())
            }
            "hub-bound-replay" => ExperimentSpec::HubBoundReplay(HubBoundReplaySpec::default()),
            "tightness-matching" => {
                ExperimentSpec::TightnessMatching(TightnessMatchingSpec::default())
            }
            "poa-sweep" => ExperimentSpec::PoaSweep(PoaSweepSpec::default()),
            "lifetime-validation" => {
                ExperimentSpec::LifetimeValidation(LifetimeValidationSpec::default())
            }
            "game-dynamics" => ExperimentSpec::GameDynamics(GameDynamicsSpec::default()),
            _ => return None,
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentSpec::CompareTopologies(_) => "compare-topologies",
            ExperimentSpec::HubBoundReplay(_) => "hub-bound-replay",
            ExperimentSpec::TightnessMatching(_) => "tightness-matching",
            ExperimentSpec::PoaSweep(_) => "poa-sweep",
            ExperimentSpec::LifetimeValidation(_) => "lifetime-validation",
            ExperimentSpec::GameDynamics(_) => "game-dynamics",
        }
    }

    /// Parameter sanity, checked before any work starts.
    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentSpec::CompareTopologies(s) => {
                if s.n < 3 {
                    return Err(anyhow!("n must be at least 3"));
                }
                if s.trials == 0 {
                    return Err(anyhow!("trials must be positive"));
                }
                let step_ok = s.exponent_step.is_finite() && s.exponent_step > 0.0;
                if !step_ok || s.exponent_max < s.exponent_min {
                    return Err(anyhow!("bad exponent sweep bounds"));
                }
                let rates_ok = s.rate_exponent.is_finite()
                    && s.rate_exponent > 1.0
                    && s.rate_min.is_finite()
                    && s.rate_min > 0.0;
                if !rates_ok {
                    return Err(anyhow!(
                        "rate exponent must exceed 1 and rate floor be positive"
                    ));
                }
            }
            ExperimentSpec::HubBoundReplay(s) => {
                if s.instances == 0 || s.trace_length == 0 {
                    return Err(anyhow!("instances and trace length must be positive"));
                }
                if s.max_agents < 4 {
                    return Err(anyhow!("max agents must be at least 4"));
                }
            }
            ExperimentSpec::TightnessMatching(s) => {
                if s.max_pairs == 0 {
                    return Err(anyhow!("need at least one pair"));
                }
            }
            ExperimentSpec::PoaSweep(s) => {
                if s.k_max < 4 {
                    return Err(anyhow!("sweep must reach at least 4 agents"));
                }
            }
            ExperimentSpec::LifetimeValidation(s) => {
                if s.omegas.is_empty() || s.lambdas.is_empty() {
                    return Err(anyhow!("grid must be non-empty"));
                }
                for &omega in &s.omegas {
                    let even_int = omega.is_finite()
                        && omega >= 2.0
                        && omega.fract() == 0.0
                        && (omega as u64).is_multiple_of(2);
                    if !even_int {
                        return Err(anyhow!("liquidity {omega} is not an even integer >= 2"));
                    }
                }
                for &lambda in &s.lambdas {
                    if !(lambda.is_finite() && lambda > 0.0) {
                        return Err(anyhow!("rate {lambda} must be positive and finite"));
                    }
                }
                if s.target_resets == 0 {
                    return Err(anyhow!("target resets must be positive"));
                }
            }
            ExperimentSpec::GameDynamics(s) => {
                if s.n < 3 || s.instances == 0 {
                    return Err(anyhow!("need at least 3 agents and one instance"));
                }
            }
        }
        Ok(())
    }

    /// Runs the experiment and writes its outputs under `dir`. Returns the
    /// output file names, human-readable summary lines, and any flagged
    /// property violations (which map to a nonzero exit without aborting
    /// the emission).
    pub fn run(&self, seed: u64, dir: &Path) -> Result<ExperimentReport> {
        self.validate()?;
        match self {
            ExperimentSpec::CompareTopologies(s) => {
                let result = run_compare_topologies(s, seed)?;
                let outputs = result.write(dir)?;
                let mut flagged = Vec::new();
                for row in &result.rows {
                    if row.hub_tree_ratio > 8.0 * (1.0 + 1e-6) {
                        flagged.push(format!(
                            "exponent {} trial {}: hub/tree ratio {} exceeds 8",
                            row.exponent, row.trial, row.hub_tree_ratio,
                        ));
                    }
                }
                let mut summary = vec![format!(
                    "{} trials across {} sweep points ({} skipped)",
                    result.rows.len(),
                    result.summary.len(),
                    result.skipped,
                )];
                for point in &result.summary {
                    summary.push(format!(
                        "exponent {:.2}: hub/tree {:.3}, complete/tree {:.3}, centrality {:.4}",
                        point.exponent,
                        point.mean_hub_tree_ratio,
                        point.mean_complete_tree_ratio,
                        point.mean_centrality,
                    ));
                }
                Ok(ExperimentReport {
                    outputs,
                    summary,
                    flagged,
                })
            }
            ExperimentSpec::HubBoundReplay(s) => {
                let result = run_hub_bound_replay(s, seed)?;
                let outputs = result.write(dir)?;
                let flagged = result
                    .rows
                    .iter()
                    .filter(|r| !r.within_bound)
                    .map(|r| {
                        format!(
                            "instance {} center {}: {} hub resets vs {} original",
                            r.instance, r.center, r.resets_hub, r.resets,
                        )
                    })
                    .collect();
                let summary = vec![format!(
                    "{} center replays over {} instances, worst reset ratio {:.4}",
                    result.rows.len(),
                    s.instances,
                    result.worst_ratio(),
                )];
                Ok(ExperimentReport {
                    outputs,
                    summary,
                    flagged,
                })
            }
            ExperimentSpec::TightnessMatching(s) => {
                let result = run_tightness_matching(s)?;
                let outputs = result.write(dir)?;
                let last = result.rows.last().expect("validated non-empty");
                let summary = vec![format!(
                    "hub/matching cost ratio reaches {:.6} at {} pairs",
                    last.ratio, last.pairs,
                )];
                Ok(ExperimentReport {
                    outputs,
                    summary,
                    flagged: Vec::new(),
                })
            }
            ExperimentSpec::PoaSweep(s) => {
                let result = run_poa_sweep(s)?;
                let outputs = result.write(dir)?;
                let flagged = result
                    .rows
                    .iter()
                    .filter(|r| !r.equilibrium)
                    .map(|r| format!("k={}: stability check failed", r.k))
                    .collect();
                let last = result.rows.last().expect("validated non-empty");
                let summary = vec![format!(
                    "cost ratio grows to {:.4} at {} agents (bound {:.4})",
                    last.measured_ratio, last.k, last.bound,
                )];
                Ok(ExperimentReport {
                    outputs,
                    summary,
                    flagged,
                })
            }
            ExperimentSpec::LifetimeValidation(s) => {
                let result = run_lifetime_validation(s, seed)?;
                let outputs = result.write(dir)?;
                let worst = result
                    .rows
                    .iter()
                    .map(|r| r.relative_error)
                    .fold(0.0f64, f64::max);
                let summary = vec![format!(
                    "{} grid cells, worst relative error {:.4}%",
                    result.rows.len(),
                    worst * 100.0,
                )];
                Ok(ExperimentReport {
                    outputs,
                    summary,
                    flagged: Vec::new(),
                })
            }
            ExperimentSpec::GameDynamics(s) => {
                let result = run_game_dynamics(s, seed)?;
                let outputs = result.write(dir)?;
                let converged = result
                    .rows
                    .iter()
                    .filter(|r| r.outcome == "converged")
                    .count();
                let summary = vec![format!(
                    "{} of {} runs converged",
                    converged,
                    result.rows.len(),
                )];
                Ok(ExperimentReport {
                    outputs,
                    summary,
                    flagged: Vec::new(),
                })
            }
        }
    }
}

pub struct ExperimentReport {
    pub outputs: Vec<String>,
    pub summary: Vec<String>,
    pub flagged: Vec<String>,
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<String> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(name.to_string())
}

#[derive(Debug, Clone)]
pub struct CompareRow {
    pub sweep_index: usize,
    pub exponent: f64,
    pub trial: usize,
    pub seed: u64,
    pub centrality: f64,
    pub tree_rps: f64,
    pub hub_rps: f64,
    pub complete_rps: f64,
    pub hub_tree_ratio: f64,
    pub complete_tree_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct CompareSummaryRow {
    pub exponent: f64,
    pub trials: usize,
    pub mean_centrality: f64,
    pub mean_hub_tree_ratio: f64,
    pub mean_complete_tree_ratio: f64,
    pub max_hub_tree_ratio: f64,
}

pub struct CompareTopologiesResult {
    pub rows: Vec<CompareRow>,
    pub summary: Vec<CompareSummaryRow>,
    pub skipped: usize,
}

impl CompareTopologiesResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        let mut detail = String::from(
            "exponent,trial,seed,centrality,tree_rps,hub_rps,complete_rps,hub_tree_ratio,complete_tree_ratio\n",
        );
        for r in &self.rows {
            writeln!(
                detail,
                "{},{},{},{},{},{},{},{},{}",
                r.exponent,
                r.trial,
                r.seed,
                r.centrality,
                r.tree_rps,
                r.hub_rps,
                r.complete_rps,
                r.hub_tree_ratio,
                r.complete_tree_ratio,
            )?;
        }
        let mut brief = String::from(
            "exponent,trials,mean_centrality,mean_hub_tree_ratio,mean_complete_tree_ratio,max_hub_tree_ratio\n",
        );
        for s in &self.summary {
            writeln!(
                brief,
                "{},{},{},{},{},{}",
                s.exponent,
                s.trials,
                s.mean_centrality,
                s.mean_hub_tree_ratio,
                s.mean_complete_tree_ratio,
                s.max_hub_tree_ratio,
            )?;
        }
        Ok(vec![
            write_file(dir, "compare_topologies.csv", &detail)?,
            write_file(dir, "compare_topologies_summary.csv", &brief)?,
        ])
    }
}

/// How concentrated the demand is on few trading relationships: the share
/// of possible pairs with no demand, 0 when every pair trades and
/// approaching 1 when few do. Direct routing builds one channel per
/// trading pair while a tree aggregates them into n-1 channels, so the
/// spread of demand over distinct pairs is the axis that governs how much
/// the complete graph overpays.
fn demand_centrality(demand: &DemandMatrix) -> f64 {
    let n = demand.n();
    let possible = n * (n - 1) / 2;
    if possible == 0 {
        return 0.0;
    }
    1.0 - demand.pairs().len() as f64 / possible as f64
}

fn compare_trial(
    spec: &CompareTopologiesSpec,
    sweep_index: usize,
    exponent: f64,
    trial: usize,
    seed: u64,
) -> Result<CompareRow, String> {
    let config = GenesisConfig {
        n: spec.n,
        degree_exponent: exponent,
        rate_exponent: spec.rate_exponent,
        rate_min: spec.rate_min,
        seed,
    };
    let demand = genesis::generate(&config).map_err(|e| e.to_string())?;
    let tree = optimal_spanning_tree(&demand).map_err(|e| e.to_string())?;
    let tree_rates = tree_rates_by_cuts(&tree, &demand).map_err(|e| e.to_string())?;
    let tree_rps = unit_rps(&tree_rates);

    // The best hub center carries the heaviest row: its own channel list
    // then excludes the largest cube-root term.
    let n = spec.n;
    let center = (0..n)
        .max_by(|&a, &b| {
            demand
                .row_sum(a)
                .partial_cmp(&demand.row_sum(b))
                .expect("row sums are finite")
        })
        .expect("n >= 3");
    let star = Topology::star(n, center).map_err(|e| e.to_string())?;
    let policy = hub_routing(n, center).map_err(|e| e.to_string())?;
    let hub_rates = edge_rates(&star, &policy, &demand).map_err(|e| e.to_string())?;
    let hub_rps = unit_rps(&hub_rates);

    let complete = Topology::complete(n);
    let direct = direct_routing(&demand);
    let direct_rates = edge_rates(&complete, &direct, &demand).map_err(|e| e.to_string())?;
    let complete_rps = unit_rps(&direct_rates);

    Ok(CompareRow {
        sweep_index,
        exponent,
        trial,
        seed,
        centrality: demand_centrality(&demand),
        tree_rps,
        hub_rps,
        complete_rps,
        hub_tree_ratio: hub_rps / tree_rps,
        complete_tree_ratio: complete_rps / tree_rps,
    })
}

pub fn run_compare_topologies(
    spec: &CompareTopologiesSpec,
    seed: u64,
) -> Result<CompareTopologiesResult> {
    let points =
        ((spec.exponent_max - spec.exponent_min) / spec.exponent_step).round() as usize + 1;
    let mut jobs = Vec::new();
    for sweep_index in 0..points {
        let exponent = spec.exponent_min + sweep_index as f64 * spec.exponent_step;
        if exponent > spec.exponent_max + 1e-9 {
            break;
        }
        for trial in 0..spec.trials {
            jobs.push((sweep_index, exponent, trial));
        }
    }
    let outcomes: Vec<Result<CompareRow, String>> = jobs
        .par_iter()
        .map(|&(sweep_index, exponent, trial)| {
            let trial_seed = derive_seed(seed, &[sweep_index as u64, trial as u64]);
            compare_trial(spec, sweep_index, exponent, trial, trial_seed)
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = 0;
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(msg) => {
                skipped += 1;
                eprintln!("skipping trial: {msg}");
            }
        }
    }
    rows.sort_by_key(|a| (a.sweep_index, a.trial));

    let mut summary = Vec::new();
    for sweep_index in 0..points {
        let group: Vec<&CompareRow> = rows
            .iter()
            .filter(|r| r.sweep_index == sweep_index)
            .collect();
        if group.is_empty() {
            continue;
        }
        let count = group.len() as f64;
        summary.push(CompareSummaryRow {
            exponent: group[0].exponent,
            trials: group.len(),
            mean_centrality: group.iter().map(|r| r.centrality).sum::<f64>() / count,
            mean_hub_tree_ratio: group.iter().map(|r| r.hub_tree_ratio).sum::<f64>() / count,
            mean_complete_tree_ratio: group.iter().map(|r| r.complete_tree_ratio).sum::<f64>()
                / count,
            max_hub_tree_ratio: group.iter().map(|r| r.hub_tree_ratio).fold(0.0, f64::max),
        });
    }
    Ok(CompareTopologiesResult {
        rows,
        summary,
        skipped,
    })
}

#[derive(Debug, Clone)]
pub struct HubBoundRow {
    pub instance: usize,
    pub seed: u64,
    pub n: usize,
    pub center: usize,
    pub resets: u64,
    pub resets_hub: u64,
    pub liquidity: f64,
    pub liquidity_hub: f64,
    pub within_bound: bool,
}

pub struct HubBoundResult {
    pub rows: Vec<HubBoundRow>,
}

impl HubBoundResult {
    pub fn worst_ratio(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.resets > 0)
            .map(|r| r.resets_hub as f64 / r.resets as f64)
            .fold(0.0, f64::max)
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.within_bound).count()
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        let mut body = String::from(
            "instance,seed,n,center,resets,resets_hub,liquidity,liquidity_hub,within_bound\n",
        );
        for r in &self.rows {
            writeln!(
                body,
                "{},{},{},{},{},{},{},{},{}",
                r.instance,
                r.seed,
                r.n,
                r.center,
                r.resets,
                r.resets_hub,
                r.liquidity,
                r.liquidity_hub,
                r.within_bound,
            )?;
        }
        Ok(vec![write_file(dir, "hub_bound_replay.csv", &body)?])
    }
}

fn hub_bound_instance(
    spec: &HubBoundReplaySpec,
    instance: usize,
    seed: u64,
) -> Result<Vec<HubBoundRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=spec.max_agents);
    let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut topology = Topology::from_tree_code(n, &code)?;
    for i in 0..n {
        for j in i + 1..n {
            if !topology.contains_edge(Edge::new(i, j)) && rng.gen_bool(0.2) {
                topology.insert_edge(i, j)?;
            }
        }
    }
    let liquidity = LiquidityAllocation::from_entries(
        topology
            .edges()
            .map(|e| (e, 2.0 * rng.gen_range(1..=5) as f64))
            .collect::<Vec<_>>(),
    )?;
    let policy = shortest_path_routing(&topology);
    let network = Network::new(topology, liquidity)?;

    let mut transfers = Vec::with_capacity(spec.trace_length);
    let mut time = 0.0;
    for _ in 0..spec.trace_length {
        let source = rng.gen_range(0..n);
        let mut target = rng.gen_range(0..n - 1);
        if target >= source {
            target += 1;
        }
        time += rng.gen_range(1e-6..1.0);
        transfers.push(Transfer {
            source,
            target,
            time,
        });
    }
    let trace = TransactionTrace::new(transfers)?;

    let base = replay(&trace, &network, &policy)?;
    let total = network.total_liquidity();
    let mut rows = Vec::with_capacity(n);
    for center in 0..n {
        let hub = build_hub(&network, &policy, center)?;
        let resets_hub = replay_hub(&trace, &hub)?;
        let liquidity_hub = hub.total_liquidity();
        let within_bound = resets_hub <= 2 * base && liquidity_hub <= 2.0 * total + 1e-9;
        rows.push(HubBoundRow {
            instance,
            seed,
            n,
            center,
            resets: base,
            resets_hub,
            liquidity: total,
            liquidity_hub,
            within_bound,
        });
    }
    Ok(rows)
}

pub fn run_hub_bound_replay(spec: &HubBoundReplaySpec, seed: u64) -> Result<HubBoundResult> {
    let nested: Vec<Result<Vec<HubBoundRow>>> = (0..spec.instances)
        .into_par_iter()
        .map(|instance| {
            let instance_seed = derive_seed(seed, &[instance as u64]);
            hub_bound_instance(spec, instance, instance_seed)
        })
        .collect();
    let mut rows = Vec::new();
    for group in nested {
        rows.extend(group?);
    }
    rows.sort_by_key(|a| (a.instance, a.center));
    Ok(HubBoundResult { rows })
}

#[derive(Debug, Clone)]
pub struct TightnessRow {
    pub pairs: usize,
    pub matching_cost: f64,
    pub hub_center: usize,
    pub hub_cost: f64,
    pub ratio: f64,
}

pub struct TightnessResult {
    pub rows: Vec<TightnessRow>,
}

impl TightnessResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        let mut body = String::from("pairs,matching_cost,hub_center,hub_cost,ratio\n");
        for r in &self.rows {
            writeln!(
                body,
                "{},{},{},{},{}",
                r.pairs, r.matching_cost, r.hub_center, r.hub_cost, r.ratio,
            )?;
        }
        Ok(vec![write_file(dir, "tightness_matching.csv", &body)?])
    }
}

pub fn run_tightness_matching(spec: &TightnessMatchingSpec) -> Result<TightnessResult> {
    // Any price pair works: the optimal cost of every design scales the
    // same way in the fee and interest rate, so the ratio is price-free.
    let params = CostParams::new(1.0, 1.0)?;
    let mut rows = Vec::with_capacity(spec.max_pairs);
    for pairs in 1..=spec.max_pairs {
        let n = 2 * pairs;
        let mut demand = DemandMatrix::zeros(n);
        let mut matching = EdgeRates::new();
        for p in 0..pairs {
            demand.set_rate(2 * p, 2 * p + 1, 1.0);
            matching.insert(Edge::new(2 * p, 2 * p + 1), 1.0);
        }
        let (_, matching_cost) = optimal_total_liquidity(&matching, &params)?;
        let (hub_center, hub_cost) = paynet::best_hub(&demand, &params)?;
        rows.push(TightnessRow {
            pairs,
            matching_cost: matching_cost.total,
            hub_center,
            hub_cost: hub_cost.total,
            ratio: hub_cost.total / matching_cost.total,
        });
    }
    Ok(TightnessResult { rows })
}

#[derive(Debug, Clone)]
pub struct PoaRow {
    pub k: usize,
    pub bound: f64,
    pub measured_ratio: f64,
    pub equilibrium: bool,
}

pub struct PoaSweepResult {
    pub rows: Vec<PoaRow>,
}

impl PoaSweepResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        let mut body = String::from("k,bound,measured_ratio,equilibrium\n");
        for r in &self.rows {
            writeln!(
                body,
                "{},{},{},{}",
                r.k, r.bound, r.measured_ratio, r.equilibrium,
            )?;
        }
        Ok(vec![write_file(dir, "poa_sweep.csv", &body)?])
    }
}

pub fn run_poa_sweep(spec: &PoaSweepSpec) -> Result<PoaSweepResult> {
    let params = CostParams::new(1.0, 1.0)?;
    let rows: Vec<Result<PoaRow>> = (4..=spec.k_max)
        .into_par_iter()
        .map(|k| {
            let inst = poa_instance(k)?;
            let stable = GameState::new(inst.equilibrium_tree, inst.demand.clone(), params)?;
            let optimal = GameState::new(inst.optimal_tree, inst.demand, params)?;
            Ok(PoaRow {
                k,
                bound: inst.ratio_lower_bound,
                measured_ratio: stable.total_cost() / optimal.total_cost(),
                equilibrium: is_equilibrium(&stable),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PoaSweepResult { rows })
}

#[derive(Debug, Clone)]
pub struct LifetimeRow {
    pub omega: f64,
    pub lambda: f64,
    pub analytic: f64,
    pub empirical: f64,
    pub relative_error: f64,
    pub resets: u64,
    pub elapsed: f64,
}

pub struct LifetimeResult {
    pub rows: Vec<LifetimeRow>,
}

impl LifetimeResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        let mut body =
            String::from("omega,lambda,analytic,empirical,relative_error,resets,elapsed\n");
        for r in &self.rows {
            writeln!(
                body,
                "{},{},{},{},{},{},{}",
                r.omega, r.lambda, r.analytic, r.empirical, r.relative_error, r.resets, r.elapsed,
            )?;
        }
        Ok(vec![write_file(dir, "lifetime_validation.csv", &body)?])
    }
}

pub fn run_lifetime_validation(spec: &LifetimeValidationSpec, seed: u64) -> Result<LifetimeResult> {
    let mut cells = Vec::new();
    for (i, &omega) in spec.omegas.iter().enumerate() {
        for (j, &lambda) in spec.lambdas.iter().enumerate() {
            cells.push((i, j, omega, lambda));
        }
    }
    let rows: Vec<Result<LifetimeRow>> = cells
        .par_iter()
        .map(|&(i, j, omega, lambda)| {
            let cell_seed = derive_seed(seed, &[i as u64, j as u64]);
            let topology = Topology::path(2);
            let liquidity = LiquidityAllocation::from_entries([(Edge::new(0, 1), omega)])?;
            let network = Network::new(topology.clone(), liquidity)?;
            let mut demand = DemandMatrix::zeros(2);
            demand.set_rate(0, 1, lambda);
            let policy = tree_routing(&topology, &demand)?;
            let result = simulate(&SimConfig {
                network,
                policy,
                demand,
                horizon: Horizon::Resets(spec.target_resets),
                seed: cell_seed,
            })?;
            let empirical = result
                .mean_lifetime(Edge::new(0, 1))
                .expect("reset horizon guarantees resets");
            let analytic = omega * omega / (8.0 * lambda);
            Ok(LifetimeRow {
                omega,
                lambda,
                analytic,
                empirical,
                relative_error: (empirical - analytic).abs() / analytic,
                resets: result.total_resets(),
                elapsed: result.elapsed(),
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(LifetimeResult { rows })
}

#[derive(Debug, Clone)]
pub struct GameDynamicsRow {
    pub instance: usize,
    pub seed: u64,
    pub n: usize,
    pub outcome: String,
    pub rounds: usize,
    pub moves: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub equilibrium: bool,
}

pub struct GameDynamicsResult {
    pub rows: Vec<GameDynamicsRow>,
    pub history: Vec<String>,
}

impl GameDynamicsResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        let mut body = String::from(
            "instance,seed,n,outcome,rounds,moves,initial_cost,final_cost,equilibrium\n",
        );
        for r in &self.rows {
            writeln!(
                body,
                "{},{},{},{},{},{},{},{},{}",
                r.instance,
                r.seed,
                r.n,
                r.outcome,
                r.rounds,
                r.moves,
                r.initial_cost,
                r.final_cost,
                r.equilibrium,
            )?;
        }
        let mut lines = self.history.join("\n");
        if !lines.is_empty() {
            lines.push('\n');
        }
        Ok(vec![
            write_file(dir, "game_dynamics.csv", &body)?,
            write_file(dir, "game_dynamics_history.jsonl", &lines)?,
        ])
    }
}

fn outcome_name(outcome: &DynamicsOutcome) -> &'static str {
    match outcome {
        DynamicsOutcome::Converged => "converged",
        DynamicsOutcome::Cycled => "cycled",
        DynamicsOutcome::RoundLimit => "round-limit",
    }
}

pub fn run_game_dynamics(spec: &GameDynamicsSpec, seed: u64) -> Result<GameDynamicsResult> {
    let params = CostParams::new(1.0, 1.0)?;
    let runs: Vec<Result<(GameDynamicsRow, Vec<String>)>> = (0..spec.instances)
        .into_par_iter()
        .map(|instance| {
            let run_seed = derive_seed(seed, &[instance as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
            let n = spec.n;
            let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
            let tree = Topology::from_tree_code(n, &code)?;
            let mut demand = DemandMatrix::zeros(n);
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(0.5) {
                        demand.set_rate(i, j, rng.gen_range(0.2..3.0));
                    }
                }
            }
            demand.set_rate(0, n - 1, rng.gen_range(0.2..3.0));
            let state = GameState::new(tree, demand, params)?;
            let initial_cost = state.total_cost();
            let order: Vec<usize> = (0..n).collect();
            let result = best_response_dynamics(state, spec.max_rounds, &order)?;
            let rounds = result.history.last().map(|h| h.round + 1).unwrap_or(0);
            let mut history = Vec::with_capacity(result.history.len());
            for entry in &result.history {
                let mut value = serde_json::to_value(entry)?;
                value
                    .as_object_mut()
                    .expect("history entries are objects")
                    .insert("instance".to_string(), instance.into());
                history.push(serde_json::to_string(&value)?);
            }
            let row = GameDynamicsRow {
                instance,
                seed: run_seed,
                n,
                outcome: outcome_name(&result.outcome).to_string(),
                rounds,
                moves: result.history.len(),
                initial_cost,
                final_cost: result.state.total_cost(),
                equilibrium: is_equilibrium(&result.state),
            };
            Ok((row, history))
        })
        .collect();
    let mut rows = Vec::new();
    let mut history = Vec::new();
    for run in runs {
        let (row, lines) = run?;
        rows.push(row);
        history.extend(lines);
    }
    rows.sort_by_key(|r| r.instance);
    Ok(GameDynamicsResult { rows, history })
}
