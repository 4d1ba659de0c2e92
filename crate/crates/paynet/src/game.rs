//! Greedy channel rewiring over spanning trees.
//!
//! Agents jointly maintain a spanning tree and pay the share of each
//! channel's minimum running cost that their own transfers cause. A turn
//! lets one agent swap a single channel it participates in for another one
//! it participates in, provided the result is still a spanning tree. The
//! module enumerates those swaps, prices them, detects stable trees, runs
//! round-robin best-response play, and constructs a chain family whose
//! stable-to-optimal cost ratio grows linearly without bound.

use crate::costing::{player_cost, CostError};
use crate::net::{CostParams, DemandMatrix, Edge, NetError, Topology};
use crate::routing::{edge_rates, tree_routing, EdgeRates, RoutingError, RoutingPolicy};
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

/// Cost improvements smaller than this are treated as noise: a move
/// counts as improving only below the negated tolerance.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("game trees must be spanning trees")]
    NotASpanningTree,
    #[error("demand covers {demand} agents but the tree has {tree}")]
    AgentCountMismatch { demand: usize, tree: usize },
    #[error("player {player} cannot swap ({r0}, {r1}) for ({a0}, {a1}): {reason}")]
    IllegalMove {
        player: usize,
        r0: usize,
        r1: usize,
        a0: usize,
        a1: usize,
        reason: String,
    },
    #[error("player order must be a permutation of the agents")]
    BadOrder,
    #[error("chain instances need at least 4 agents, got {0}")]
    TooFewAgents(usize),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// One agent's swap: drop one of its channels, open another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Move {
    pub player: usize,
    pub removed: Edge,
    pub added: Edge,
}

/// A spanning tree, the demand it serves, and each agent's cost share,
/// kept in sync with the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    tree: Topology,
    demand: DemandMatrix,
    params: CostParams,
    costs: Vec<f64>,
}

fn per_player_costs(
    tree: &Topology,
    demand: &DemandMatrix,
    params: &CostParams,
) -> Result<(Vec<f64>, RoutingPolicy, EdgeRates), GameError> {
    let policy = tree_routing(tree, demand)?;
    let rates = edge_rates(tree, &policy, demand)?;
    let costs = (0..tree.n())
        .map(|v| player_cost(v, &rates, &policy, demand, params))
        .collect();
    Ok((costs, policy, rates))
}

impl GameState {
    pub fn new(
        tree: Topology,
        demand: DemandMatrix,
        params: CostParams,
    ) -> Result<Self, GameError> {
        if !tree.is_spanning_tree() {
            return Err(GameError::NotASpanningTree);
        }
        if demand.n() != tree.n() {
            return Err(GameError::AgentCountMismatch {
                demand: demand.n(),
                tree: tree.n(),
            });
        }
        demand.validate().map_err(NetError::from)?;
        let (costs, _, _) = per_player_costs(&tree, &demand, &params)?;
        Ok(GameState {
            tree,
            demand,
            params,
            costs,
        })
    }

    pub fn n(&self) -> usize {
        self.tree.n()
    }

    pub fn tree(&self) -> &Topology {
        &self.tree
    }

    pub fn demand(&self) -> &DemandMatrix {
        &self.demand
    }

    pub fn params(&self) -> &CostParams {
        &self.params
    }

    pub fn cost(&self, player: usize) -> f64 {
        self.costs[player]
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    /// The same demand and pricing over a different tree.
    pub fn with_tree(&self, tree: Topology) -> Result<Self, GameError> {
        GameState::new(tree, self.demand.clone(), self.params)
    }
}

/// Every swap `player` may make: drop one incident channel, reconnect the
/// two halves with another channel of its own. The identity swap is
/// excluded. Moves come out sorted.
pub fn legal_moves(state: &GameState, player: usize) -> Vec<Move> {
    let mut moves = Vec::new();
    let incident: Vec<Edge> = state.tree.edges().filter(|e| e.contains(player)).collect();
    for removed in incident {
        let mut cut = state.tree.clone();
        cut.remove_edge(removed);
        let components = cut.components();
        let far_side = components
            .into_iter()
            .find(|c| c.binary_search(&player).is_err())
            .expect("removing a tree edge leaves two components");
        for w in far_side {
            if w == removed.other(player) {
                continue;
            }
            moves.push(Move {
                player,
                removed,
                added: Edge::new(player, w),
            });
        }
    }
    moves.sort();
    moves
}

fn validate_move(state: &GameState, mv: &Move) -> Result<Topology, GameError> {
    let illegal = |reason: &str| GameError::IllegalMove {
        player: mv.player,
        r0: mv.removed.lo(),
        r1: mv.removed.hi(),
        a0: mv.added.lo(),
        a1: mv.added.hi(),
        reason: reason.to_string(),
    };
    if mv.player >= state.n() {
        return Err(illegal("player out of range"));
    }
    if !mv.removed.contains(mv.player) || !mv.added.contains(mv.player) {
        return Err(illegal("both channels must involve the player"));
    }
    if mv.removed == mv.added {
        return Err(illegal("identity swap"));
    }
    if !state.tree.contains_edge(mv.removed) {
        return Err(illegal("dropped channel is not in the tree"));
    }
    let mut tree = state.tree.clone();
    tree.remove_edge(mv.removed);
    tree.insert_edge(mv.added.lo(), mv.added.hi())
        .map_err(|_| illegal("new channel already exists"))?;
    if !tree.is_spanning_tree() {
        return Err(illegal("result is not a spanning tree"));
    }
    Ok(tree)
}

/// Change in the mover's own cost if the swap were played, recomputed
/// from scratch on the new tree. Negative is an improvement.
pub fn move_cost_delta(state: &GameState, mv: &Move) -> Result<f64, GameError> {
    let tree = validate_move(state, mv)?;
    let (costs, _, _) = per_player_costs(&tree, &state.demand, &state.params)?;
    Ok(costs[mv.player] - state.costs[mv.player])
}

/// An improving swap and how much it saves its player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    #[serde(flatten)]
    pub mv: Move,
    pub delta: f64,
}

/// First strictly improving swap in (player, move) order, if any.
pub fn find_improving_move(state: &GameState) -> Option<Witness> {
    for player in 0..state.n() {
        for mv in legal_moves(state, player) {
            let delta = move_cost_delta(state, &mv).expect("generated moves are legal");
            if delta < -IMPROVEMENT_TOLERANCE {
                return Some(Witness { mv, delta });
            }
        }
    }
    None
}

/// A tree is stable when no player has a swap that strictly lowers its
/// own cost.
pub fn is_equilibrium(state: &GameState) -> bool {
    find_improving_move(state).is_none()
}

/// One played move in a dynamics run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppliedMove {
    pub round: usize,
    #[serde(flatten)]
    pub mv: Move,
    pub delta: f64,
    pub total_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DynamicsOutcome {
    /// A full round passed with no player moving.
    Converged,
    /// The round-start tree repeated, so play loops forever.
    Cycled,
    /// The round budget ran out first.
    RoundLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsResult {
    pub state: GameState,
    pub outcome: DynamicsOutcome,
    pub history: Vec<AppliedMove>,
}

impl DynamicsResult {
    pub fn converged(&self) -> bool {
        self.outcome == DynamicsOutcome::Converged
    }
}

fn canonical(tree: &Topology) -> Vec<(usize, usize)> {
    tree.edges().map(|e| (e.lo(), e.hi())).collect()
}

/// Round-robin best-response play: each player in `order` takes its
/// cheapest improving swap (lexicographic ties). Stops when a round passes
/// with no move, when a round-start tree repeats, or after `max_rounds`.
pub fn best_response_dynamics(
    initial: GameState,
    max_rounds: usize,
    order: &[usize],
) -> Result<DynamicsResult, GameError> {
    let n = initial.n();
    {
        let mut seen = vec![false; n];
        for &p in order {
            if p >= n || seen[p] {
                return Err(GameError::BadOrder);
            }
            seen[p] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(GameError::BadOrder);
        }
    }
    let mut state = initial;
    let mut seen_trees = BTreeSet::new();
    seen_trees.insert(canonical(&state.tree));
    let mut history = Vec::new();
    for round in 0..max_rounds {
        let mut moved = false;
        for &player in order {
            let mut best: Option<(f64, Move, Topology)> = None;
            for mv in legal_moves(&state, player) {
                let tree = validate_move(&state, &mv).expect("generated moves are legal");
                let (costs, _, _) = per_player_costs(&tree, &state.demand, &state.params)?;
                let delta = costs[player] - state.costs[player];
                let improves = match &best {
                    None => delta < -IMPROVEMENT_TOLERANCE,
                    Some((incumbent, _, _)) => delta < *incumbent,
                };
                if improves {
                    best = Some((delta, mv, tree));
                }
            }
            if let Some((delta, mv, tree)) = best {
                state = state.with_tree(tree)?;
                history.push(AppliedMove {
                    round,
                    mv,
                    delta,
                    total_cost: state.total_cost(),
                });
                moved = true;
            }
        }
        if !moved {
            return Ok(DynamicsResult {
                state,
                outcome: DynamicsOutcome::Converged,
                history,
            });
        }
        if !seen_trees.insert(canonical(&state.tree)) {
            return Ok(DynamicsResult {
                state,
                outcome: DynamicsOutcome::Cycled,
                history,
            });
        }
    }
    Ok(DynamicsResult {
        state,
        outcome: DynamicsOutcome::RoundLimit,
        history,
    })
}

/// The linear-chain family with demand only between the chain's head,
/// its neighbor, and the two tail agents. The chain is stable, yet its
/// total cost exceeds the optimum by a factor growing linearly in `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoaInstance {
    pub demand: DemandMatrix,
    pub equilibrium_tree: Topology,
    pub optimal_tree: Topology,
    pub ratio_lower_bound: f64,
}

/// Builds the `k`-agent chain instance: unit demand between agents
/// (0, 1), (0, k-1), and (k-2, k-1); the chain as the stable candidate;
/// and a three-unit-channel comparison tree achieving the optimum.
pub fn poa_instance(k: usize) -> Result<PoaInstance, GameError> {
    if k < 4 {
        return Err(GameError::TooFewAgents(k));
    }
    let mut demand = DemandMatrix::zeros(k);
    demand.set_rate(0, 1, 1.0);
    demand.set_rate(0, k - 1, 1.0);
    demand.set_rate(k - 2, k - 1, 1.0);
    let equilibrium_tree = Topology::path(k);
    let mut optimal_tree = Topology::empty(k);
    for i in 0..k - 1 {
        if i == k - 3 {
            continue;
        }
        optimal_tree.insert_edge(i, i + 1)?;
    }
    optimal_tree.insert_edge(0, k - 1)?;
    let ratio_lower_bound = ((k - 3) as f64 + 2f64.powf(4.0 / 3.0)) / 3.0;
    Ok(PoaInstance {
        demand,
        equilibrium_tree,
        optimal_tree,
        ratio_lower_bound,
    })
}
