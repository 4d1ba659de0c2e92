//! Star-shaped replacement networks and trace replay.
//!
//! A hub replaces an arbitrary network with a star: every agent keeps a
//! single channel to the chosen center. Each spoke is funded with the
//! combined liquidity of the agent's original channels and is managed
//! internally as one sub-channel per original channel, each holding that
//! channel's coins. A transfer is accounted against the sub-channels that
//! shadow the edges of its original route, and a sub-channel that empties
//! a side resets on its own. Every original channel is shadowed once at
//! each endpoint spoke (the center has no spoke), so each shadow resets
//! exactly as often as its original and the hub pays at most twice the
//! resets and parks at most twice the coins of the network it replaces,
//! whatever the trace.

use crate::costing::{optimal_total_liquidity, CostError, NetworkCost};
use crate::net::{ChannelState, CostParams, DemandMatrix, Edge, NetError, Network, Topology};
use crate::routing::{edge_rates, hub_routing, RoutingError, RoutingPolicy};
use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HubError {
    #[error("hub center {center} out of range for {n} agents")]
    CenterOutOfRange { center: usize, n: usize },
    #[error("agent {agent} out of range for {n} agents")]
    AgentOutOfRange { agent: usize, n: usize },
    #[error("channel ({0}, {1}) liquidity must be a positive even integer for replay")]
    OddLiquidity(usize, usize),
    #[error("need at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("transfer {0} moves coins from an agent to itself")]
    SelfTransfer(usize),
    #[error("transfer {0} has a non-finite or negative timestamp")]
    BadTimestamp(usize),
    #[error("transfer {0} is earlier than its predecessor")]
    OutOfOrder(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A single one-coin transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    pub source: usize,
    pub target: usize,
    pub time: f64,
}

/// A time-ordered sequence of one-coin transfers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransactionTrace {
    transfers: Vec<Transfer>,
}

impl TransactionTrace {
    pub fn new(transfers: Vec<Transfer>) -> Result<Self, TraceError> {
        let mut last = 0.0f64;
        for (k, t) in transfers.iter().enumerate() {
            if t.source == t.target {
                return Err(TraceError::SelfTransfer(k));
            }
            if !t.time.is_finite() || t.time < 0.0 {
                return Err(TraceError::BadTimestamp(k));
            }
            if t.time < last {
                return Err(TraceError::OutOfOrder(k));
            }
            last = t.time;
        }
        Ok(TransactionTrace { transfers })
    }

    pub fn len(&self) -> usize {
        self.transfers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transfers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transfer> + '_ {
        self.transfers.iter()
    }

    /// Reads `src,dst,t` rows (with that header) into a trace.
    pub fn from_csv(reader: impl BufRead) -> Result<Self, TraceError> {
        let mut transfers = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| TraceError::Parse {
                line: k + 1,
                msg: e.to_string(),
            })?;
            let line = line.trim();
            if k == 0 {
                if line != "src,dst,t" {
                    return Err(TraceError::Parse {
                        line: 1,
                        msg: format!("expected header src,dst,t, got {line:?}"),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let mut next = |name: &str| {
                fields.next().ok_or(TraceError::Parse {
                    line: k + 1,
                    msg: format!("missing field {name}"),
                })
            };
            let source = next("src")?.parse().map_err(|e| TraceError::Parse {
                line: k + 1,
                msg: format!("src: {e}"),
            })?;
            let target = next("dst")?.parse().map_err(|e| TraceError::Parse {
                line: k + 1,
                msg: format!("dst: {e}"),
            })?;
            let time = next("t")?.parse().map_err(|e| TraceError::Parse {
                line: k + 1,
                msg: format!("t: {e}"),
            })?;
            transfers.push(Transfer {
                source,
                target,
                time,
            });
        }
        TransactionTrace::new(transfers)
    }

    pub fn write_csv(&self, mut writer: impl Write) -> io::Result<()> {
        writeln!(writer, "src,dst,t")?;
        for t in &self.transfers {
            writeln!(writer, "{},{},{}", t.source, t.target, t.time)?;
        }
        Ok(())
    }
}

/// One sub-channel of a spoke: the original channel it shadows and its
/// current balance, agent side first.
#[derive(Debug, Clone, PartialEq)]
pub struct ImaginaryChannel {
    pub origin: Edge,
    pub state: ChannelState,
}

/// A star network built over an existing network, with per-spoke
/// sub-channel bookkeeping and the original routing that drives it.
#[derive(Debug, Clone, PartialEq)]
pub struct HubNetwork {
    n: usize,
    center: usize,
    spokes: BTreeMap<usize, f64>,
    imaginary: BTreeMap<usize, Vec<ImaginaryChannel>>,
    routing: RoutingPolicy,
}

impl HubNetwork {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Liquidity of the spoke between `agent` and the center.
    pub fn spoke_liquidity(&self, agent: usize) -> f64 {
        self.spokes.get(&agent).copied().unwrap_or(0.0)
    }

    pub fn spokes(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.spokes.iter().map(|(&x, &w)| (x, w))
    }

    pub fn total_liquidity(&self) -> f64 {
        self.spokes.values().sum()
    }

    pub fn imaginary(&self, agent: usize) -> &[ImaginaryChannel] {
        self.imaginary.get(&agent).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The star topology the hub presents.
    pub fn topology(&self) -> Topology {
        Topology::star(self.n, self.center).expect("center is in range")
    }

    /// The original network's routing, which the replay accounts against.
    pub fn routing(&self) -> &RoutingPolicy {
        &self.routing
    }
}

/// Builds the hub over `network` centered at `center`. Each spoke receives
/// the summed liquidity of that agent's original channels, broken into one
/// equally split sub-channel per original channel; `policy` is the
/// original routing the hub replay will shadow.
pub fn build_hub(
    network: &Network,
    policy: &RoutingPolicy,
    center: usize,
) -> Result<HubNetwork, HubError> {
    let n = network.topology().n();
    if center >= n {
        return Err(HubError::CenterOutOfRange { center, n });
    }
    let mut spokes = BTreeMap::new();
    let mut imaginary: BTreeMap<usize, Vec<ImaginaryChannel>> = BTreeMap::new();
    for x in 0..n {
        if x == center {
            continue;
        }
        spokes.insert(x, 0.0);
        imaginary.insert(x, Vec::new());
    }
    for e in network.topology().edges() {
        let w = network.liquidity().get(e);
        for x in [e.lo(), e.hi()] {
            if x == center {
                continue;
            }
            *spokes.get_mut(&x).expect("spoke exists") += w;
            imaginary
                .get_mut(&x)
                .expect("spoke exists")
                .push(ImaginaryChannel {
                    origin: e,
                    state: ChannelState::equal_split(w),
                });
        }
    }
    Ok(HubNetwork {
        n,
        center,
        spokes,
        imaginary,
        routing: policy.clone(),
    })
}

fn check_even_liquidity(e: Edge, w: f64) -> Result<(), HubError> {
    if crate::net::is_even_positive(w) {
        Ok(())
    } else {
        Err(HubError::OddLiquidity(e.lo(), e.hi()))
    }
}

/// Replays a trace over a network: each transfer moves one coin along its
/// route, and any channel whose side empties resets back to the equal
/// split. Returns the number of resets. Liquidities must be positive even
/// integers so the walk stays on exact values.
pub fn replay(
    trace: &TransactionTrace,
    network: &Network,
    policy: &RoutingPolicy,
) -> Result<u64, HubError> {
    let n = network.topology().n();
    let edges: Vec<Edge> = network.topology().edges().collect();
    let index: HashMap<Edge, usize> = edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
    let mut states = Vec::with_capacity(edges.len());
    for &e in &edges {
        let w = network.liquidity().get(e);
        check_even_liquidity(e, w)?;
        states.push(ChannelState::equal_split(w));
    }
    // Per unordered pair: (channel, does forward traversal move lo -> hi).
    let mut routes: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
    let mut resets = 0u64;
    for t in trace.iter() {
        for a in [t.source, t.target] {
            if a >= n {
                return Err(HubError::AgentOutOfRange { agent: a, n });
            }
        }
        let key = (t.source.min(t.target), t.source.max(t.target));
        if let Entry::Vacant(slot) = routes.entry(key) {
            let path = policy
                .path(key.0, key.1)
                .ok_or(RoutingError::UnroutablePair(key.0, key.1))?;
            let mut steps = Vec::with_capacity(path.len() - 1);
            for w in path.windows(2) {
                let e = Edge::try_new(w[0], w[1]).map_err(RoutingError::from)?;
                let idx = *index
                    .get(&e)
                    .ok_or(RoutingError::MissingEdge(e.lo(), e.hi()))?;
                steps.push((idx, w[0] == e.lo()));
            }
            slot.insert(steps);
        }
        let steps = &routes[&key];
        let forward = t.source == key.0;
        let mut walk = |idx: usize, a_to_b: bool| {
            let state = &mut states[idx];
            state.apply(1.0, a_to_b);
            if state.is_depleted() {
                state.reset_equal();
                resets += 1;
            }
        };
        if forward {
            for &(idx, a_to_b) in steps {
                walk(idx, a_to_b);
            }
        } else {
            for &(idx, a_to_b) in steps.iter().rev() {
                walk(idx, !a_to_b);
            }
        }
    }
    Ok(resets)
}

/// Replays a trace over a hub. Each transfer is accounted against the
/// sub-channels shadowing its original route: at every non-center agent
/// the route visits, the sub-channels of the route edges at that agent
/// move one coin in the direction of travel, and a sub-channel that
/// empties a side resets individually. Returns the number of resets.
pub fn replay_hub(trace: &TransactionTrace, hub: &HubNetwork) -> Result<u64, HubError> {
    let n = hub.n();
    let center = hub.center();
    // Flatten sub-channels into one state table, keyed by (owner, origin).
    let mut states = Vec::new();
    let mut index: HashMap<(usize, Edge), usize> = HashMap::new();
    for (x, subs) in &hub.imaginary {
        for sub in subs {
            check_even_liquidity(sub.origin, sub.state.liquidity())?;
            index.insert((*x, sub.origin), states.len());
            states.push(sub.state);
        }
    }
    let mut routes: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
    let mut resets = 0u64;
    for t in trace.iter() {
        for a in [t.source, t.target] {
            if a >= n {
                return Err(HubError::AgentOutOfRange { agent: a, n });
            }
        }
        let key = (t.source.min(t.target), t.source.max(t.target));
        if let Entry::Vacant(slot) = routes.entry(key) {
            let path = hub
                .routing
                .path(key.0, key.1)
                .ok_or(RoutingError::UnroutablePair(key.0, key.1))?;
            let mut ops = Vec::new();
            for w in path.windows(2) {
                let e = Edge::try_new(w[0], w[1]).map_err(RoutingError::from)?;
                let a_to_b = w[0] == e.lo();
                for owner in [w[0], w[1]] {
                    if owner == center {
                        continue;
                    }
                    let idx = *index
                        .get(&(owner, e))
                        .ok_or(RoutingError::MissingEdge(e.lo(), e.hi()))?;
                    ops.push((idx, a_to_b));
                }
            }
            slot.insert(ops);
        }
        let ops = &routes[&key];
        let forward = t.source == key.0;
        let mut walk = |idx: usize, a_to_b: bool| {
            let state = &mut states[idx];
            state.apply(1.0, a_to_b);
            if state.is_depleted() {
                state.reset_equal();
                resets += 1;
            }
        };
        if forward {
            for &(idx, a_to_b) in ops {
                walk(idx, a_to_b);
            }
        } else {
            for &(idx, a_to_b) in ops.iter().rev() {
                walk(idx, !a_to_b);
            }
        }
    }
    Ok(resets)
}

/// Picks the center whose hub, run at its own optimal liquidity, is the
/// cheapest to maintain for `demand`. Ties go to the lowest index.
pub fn best_hub(
    demand: &DemandMatrix,
    params: &CostParams,
) -> Result<(usize, NetworkCost), HubError> {
    let n = demand.n();
    if n < 2 {
        return Err(HubError::TooFewAgents(n));
    }
    let mut best: Option<(usize, NetworkCost)> = None;
    for center in 0..n {
        let star = Topology::star(n, center)?;
        let policy = hub_routing(n, center)?;
        let rates = edge_rates(&star, &policy, demand)?;
        let (_, cost) = optimal_total_liquidity(&rates, params)?;
        let better = match &best {
            None => true,
            Some((_, incumbent)) => cost.total < incumbent.total,
        };
        if better {
            best = Some((center, cost));
        }
    }
    Ok(best.expect("n >= 2 yields at least one center"))
}
