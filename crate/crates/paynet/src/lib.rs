//! Design, costing, and simulation of symmetric off-chain payment
//! networks.
//!
//! Agents transact one-coin transfers over bidirectional channels. A
//! channel holds a fixed amount of locked liquidity split across its two
//! sides; when traffic fully shifts the liquidity to one side, the channel
//! resets to the equal split and pays a ledger record fee. Running a
//! network therefore costs record fees in proportion to how often channels
//! reset, plus interest on all locked coins.
//!
//! The crate covers that model end to end:
//!
//! - [`net`]: demand matrices, topologies, liquidity allocations, channel
//!   balances and cost parameters.
//! - [`routing`]: per-pair route tables and the per-channel traffic rates
//!   they induce.
//! - [`cuts`]: max-flow min-cuts over demand and the cut tree that yields
//!   the cheapest spanning tree for any concave per-channel objective.
//! - [`costing`]: closed forms for channel lifetime, reset rates, optimal
//!   liquidity splits, total maintenance cost and per-agent cost shares.
//! - [`hubs`]: star replacements of arbitrary networks with sub-channel
//!   bookkeeping that keeps resets within twice the original on any
//!   transfer sequence, plus trace replay to check exactly that.
//! - [`game`]: greedy single-channel rewiring over spanning trees,
//!   equilibrium detection, best-response play, and a chain family whose
//!   stable-to-optimal cost ratio grows without bound.
//! - [`sim`]: an exact event-driven simulator for Poisson transfer
//!   traffic, validating the closed forms.
//! - [`genesis`]: scale-free random demand for network-scale experiments.
//!
//! Everything is deterministic given explicit seeds; nothing reads clocks
//! or global state.

pub mod costing;
pub mod cuts;
pub mod game;
pub mod genesis;
pub mod hubs;
pub mod net;
pub mod routing;
pub mod sim;

pub use costing::{
    channel_lifetime, channel_min_cost, maintenance_cost, network_rps, optimal_allocation,
    optimal_total_liquidity, player_cost, unit_rps, CostError, NetworkCost,
};
pub use cuts::{gomory_hu, min_cut, optimal_spanning_tree, CutError, CutTree, MinCut};
pub use game::{
    best_response_dynamics, find_improving_move, is_equilibrium, legal_moves, move_cost_delta,
    poa_instance, AppliedMove, DynamicsOutcome, DynamicsResult, GameError, GameState, Move,
    PoaInstance, Witness, IMPROVEMENT_TOLERANCE,
};
pub use genesis::{GenesisConfig, GenesisError};
pub use hubs::{
    best_hub, build_hub, replay, replay_hub, HubError, HubNetwork, ImaginaryChannel, TraceError,
    TransactionTrace, Transfer,
};
pub use net::{
    ChannelState, CostParams, DemandMatrix, DemandViolation, Edge, LiquidityAllocation, NetError,
    Network, Topology,
};
pub use routing::{
    direct_routing, edge_rates, hub_routing, shortest_path_routing, tree_rates_by_cuts,
    tree_routing, EdgeRates, RoutingError, RoutingPolicy,
};
pub use sim::{
    estimate_rps, first_depletion_time, simulate, EdgeRps, Horizon, RpsEstimate, SimConfig,
    SimError, SimResult,
};
