//! Rewiring-game checks: cost deltas against an independent path oracle,
//! stability of the chain family, dynamics self-consistency, and the
//! unbounded stable-to-optimal ratio.

use paynet::net::{CostParams, DemandMatrix, Topology};
use paynet::{
    best_response_dynamics, is_equilibrium, legal_moves, move_cost_delta, poa_instance,
    DynamicsOutcome, GameState, IMPROVEMENT_TOLERANCE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::collections::VecDeque;

/// Recomputes one player's cost share from adjacency lists alone: BFS
/// paths, rate accumulation into a pair-keyed map, then the per-channel
/// floor cost weighted by the player's own traffic.
fn oracle_player_cost(
    edges: &[(usize, usize)],
    n: usize,
    demand: &DemandMatrix,
    params: &CostParams,
    player: usize,
) -> f64 {
    let mut adjacency = vec![Vec::new(); n];
    for &(u, v) in edges {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    let bfs_path = |from: usize, to: usize| -> Vec<usize> {
        let mut parent = vec![usize::MAX; n];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            for &y in &adjacency[x] {
                if parent[y] == usize::MAX {
                    parent[y] = x;
                    queue.push_back(y);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = parent[cur];
            path.push(cur);
        }
        path.reverse();
        path
    };
    let key = |u: usize, v: usize| (u.min(v), u.max(v));
    let mut rates: HashMap<(usize, usize), f64> = HashMap::new();
    let mut shares: HashMap<(usize, usize), f64> = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let lambda = demand.rate(i, j);
            if lambda <= 0.0 {
                continue;
            }
            let path = bfs_path(i, j);
            for hop in path.windows(2) {
                *rates.entry(key(hop[0], hop[1])).or_insert(0.0) += lambda;
                if i == player || j == player {
                    *shares.entry(key(hop[0], hop[1])).or_insert(0.0) += lambda;
                }
            }
        }
    }
    let alpha = params.interest_rate();
    let phi = params.record_fee();
    let mut cost = 0.0;
    for (pair, share) in shares {
        let rate = rates[&pair];
        cost += share / rate * 3.0 * (2.0 * rate * phi).powf(1.0 / 3.0) * alpha.powf(2.0 / 3.0);
    }
    cost
}

#[test]
fn deltas_match_the_independent_path_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3001);
    let params = CostParams::new(0.7, 1.3).unwrap();
    for _ in 0..15 {
        let n = 6;
        let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
        let tree = Topology::from_tree_code(n, &code).unwrap();
        let mut demand = DemandMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.6) {
                    demand.set_rate(i, j, rng.gen_range(0.1..4.0));
                }
            }
        }
        demand.set_rate(0, 1, 1.5);
        let state = GameState::new(tree.clone(), demand.clone(), params).unwrap();
        let old_edges: Vec<(usize, usize)> = tree.edges().map(|e| (e.lo(), e.hi())).collect();
        for player in 0..n {
            let before = oracle_player_cost(&old_edges, n, &demand, &params, player);
            assert!(
                (before - state.cost(player)).abs() <= 1e-9 * before.max(1.0),
                "stored cost diverges from oracle for player {player}",
            );
            for mv in legal_moves(&state, player) {
                let mut new_edges = old_edges.clone();
                new_edges
                    .retain(|&(u, v)| (u.min(v), u.max(v)) != (mv.removed.lo(), mv.removed.hi()));
                new_edges.push((mv.added.lo(), mv.added.hi()));
                let after = oracle_player_cost(&new_edges, n, &demand, &params, player);
                let delta = move_cost_delta(&state, &mv).unwrap();
                assert!(
                    (delta - (after - before)).abs() <= 1e-9 * before.max(1.0),
                    "player {player}: library delta {delta}, oracle {}",
                    after - before,
                );
            }
        }
    }
}

#[test]
fn chains_are_stable_for_small_sizes() {
    let params = CostParams::new(1.0, 1.0).unwrap();
    for k in 4..=10 {
        let inst = poa_instance(k).unwrap();
        let state = GameState::new(inst.equilibrium_tree, inst.demand, params).unwrap();
        assert!(is_equilibrium(&state), "chain of {k} is unstable");
    }
}

#[test]
fn stable_to_optimal_ratio_tracks_the_linear_bound() {
    let params = CostParams::new(0.4, 2.5).unwrap();
    let mut previous = 0.0;
    for k in 4..=40 {
        let inst = poa_instance(k).unwrap();
        let stable = GameState::new(inst.equilibrium_tree, inst.demand.clone(), params).unwrap();
        let optimal = GameState::new(inst.optimal_tree, inst.demand, params).unwrap();
        let ratio = stable.total_cost() / optimal.total_cost();
        assert!(
            ratio >= inst.ratio_lower_bound - 1e-6,
            "k={k}: ratio {ratio} below bound {}",
            inst.ratio_lower_bound,
        );
        assert!(inst.ratio_lower_bound > previous, "bound must grow in k");
        previous = inst.ratio_lower_bound;
    }
    assert!(poa_instance(33).unwrap().ratio_lower_bound > 10.0);
    assert!((poa_instance(33).unwrap().ratio_lower_bound - 10.84).abs() < 0.01);
}

#[test]
fn converged_dynamics_land_on_stable_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(907);
    let params = CostParams::new(1.0, 1.0).unwrap();
    let mut converged_runs = 0;
    for _ in 0..15 {
        let n = 6;
        let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
        let tree = Topology::from_tree_code(n, &code).unwrap();
        let mut demand = DemandMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.5) {
                    demand.set_rate(i, j, rng.gen_range(0.2..3.0));
                }
            }
        }
        let state = GameState::new(tree, demand, params).unwrap();
        let order: Vec<usize> = (0..n).collect();
        let result = best_response_dynamics(state, 300, &order).unwrap();
        for entry in &result.history {
            assert!(entry.delta < -IMPROVEMENT_TOLERANCE);
        }
        for window in result.history.windows(2) {
            assert!(window[0].round <= window[1].round);
        }
        if result.converged() {
            converged_runs += 1;
            assert!(is_equilibrium(&result.state));
        }
    }
    assert!(converged_runs > 0, "no run converged; dynamics look broken");
}

#[test]
fn zero_round_budget_reports_the_limit() {
    let params = CostParams::new(1.0, 1.0).unwrap();
    let inst = poa_instance(4).unwrap();
    let state = GameState::new(inst.equilibrium_tree, inst.demand, params).unwrap();
    let result = best_response_dynamics(state, 0, &[0, 1, 2, 3]).unwrap();
    assert_eq!(result.outcome, DynamicsOutcome::RoundLimit);
    assert!(result.history.is_empty());
}

#[test]
fn history_serializes_as_json_lines() {
    let params = CostParams::new(1.0, 1.0).unwrap();
    let mut demand = DemandMatrix::zeros(4);
    demand.set_rate(0, 1, 1.0);
    demand.set_rate(2, 3, 1.0);
    let state = GameState::new(Topology::star(4, 0).unwrap(), demand, params).unwrap();
    let result = best_response_dynamics(state, 50, &[0, 1, 2, 3]).unwrap();
    assert!(result.converged());
    let lines: Vec<String> = result
        .history
        .iter()
        .map(|entry| serde_json::to_string(entry).unwrap())
        .collect();
    assert!(!lines.is_empty());
    for line in &lines {
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        for field in ["round", "player", "removed", "added", "delta", "total_cost"] {
            assert!(value.get(field).is_some(), "missing {field} in {line}");
        }
    }
}
