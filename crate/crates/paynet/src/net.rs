//! Core domain types: agents, demand matrices, topologies, liquidity
//! allocations, cost parameters and channel balances.
//!
//! Agents are dense indices `0..n`. Every transfer moves exactly one coin;
//! rates are transfers per second and liquidities are coins. Values are
//! plain data: operations elsewhere in the crate build new values instead
//! of mutating shared state, so everything here can be shared freely
//! across threads.

use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use thiserror::Error;

/// Errors raised while constructing core types.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("self-loop on agent {0}")]
    SelfLoop(usize),
    #[error("agent {agent} out of range for {n} agents")]
    AgentOutOfRange { agent: usize, n: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("demand matrix row {row} has length {len}, expected {n}")]
    RaggedMatrix { row: usize, len: usize, n: usize },
    #[error("liquidity must be finite and non-negative")]
    BadLiquidity,
    #[error("allocation mentions edge ({0}, {1}) that is absent from the topology")]
    UnknownEdge(usize, usize),
    #[error("cost parameters must be positive and finite")]
    BadCostParams,
    #[error("channel balances must be finite and non-negative")]
    BadBalance,
    #[error("a tree code for {n} agents needs {expected} entries, got {got}")]
    BadTreeCode {
        n: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Demand(#[from] DemandViolation),
}

/// An undirected channel between two distinct agents.
///
/// Endpoints are stored with the smaller index first, so the same pair
/// compares equal no matter which order it was given in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    /// Builds an edge between two distinct agents.
    ///
    /// Panics if `u == v`; use [`Edge::try_new`] for untrusted input.
    pub fn new(u: usize, v: usize) -> Self {
        Self::try_new(u, v).expect("edge endpoints must differ")
    }

    pub fn try_new(u: usize, v: usize) -> Result<Self, NetError> {
        if u == v {
            return Err(NetError::SelfLoop(u));
        }
        Ok(if u < v {
            Edge { lo: u, hi: v }
        } else {
            Edge { lo: v, hi: u }
        })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, v: usize) -> bool {
        self.lo == v || self.hi == v
    }

    /// The endpoint opposite `v`. Panics if `v` is not an endpoint.
    pub fn other(&self, v: usize) -> usize {
        if v == self.lo {
            self.hi
        } else if v == self.hi {
            self.lo
        } else {
            panic!("agent {v} is not an endpoint of ({}, {})", self.lo, self.hi)
        }
    }
}

impl TryFrom<(usize, usize)> for Edge {
    type Error = NetError;

    fn try_from(pair: (usize, usize)) -> Result<Self, NetError> {
        Edge::try_new(pair.0, pair.1)
    }
}

impl From<Edge> for (usize, usize) {
    fn from(e: Edge) -> Self {
        (e.lo, e.hi)
    }
}

/// The first invariant a demand matrix breaks, if any.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DemandViolation {
    #[error("rate at ({i}, {j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("negative rate at ({i}, {j})")]
    Negative { i: usize, j: usize },
    #[error("nonzero self-rate at agent {i}")]
    NonzeroDiagonal { i: usize },
    #[error("rates at ({i}, {j}) and ({j}, {i}) differ")]
    Asymmetric { i: usize, j: usize },
}

#[derive(Serialize, Deserialize)]
struct RawDemandMatrix {
    n: usize,
    rates: Vec<Vec<f64>>,
}

/// Symmetric matrix of Poisson transfer rates between agent pairs.
///
/// `rate(i, j)` is the expected number of one-coin transfers per second
/// from agent `i` to agent `j`. A well-formed matrix is symmetric with a
/// zero diagonal and non-negative finite entries; construction does not
/// enforce this so that [`DemandMatrix::validate`] can report exactly
/// which invariant untrusted input breaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDemandMatrix", into = "RawDemandMatrix")]
pub struct DemandMatrix {
    n: usize,
    rates: Vec<f64>,
}

impl TryFrom<RawDemandMatrix> for DemandMatrix {
    type Error = NetError;

    fn try_from(raw: RawDemandMatrix) -> Result<Self, NetError> {
        DemandMatrix::from_rows(raw.n, raw.rates)
    }
}

impl From<DemandMatrix> for RawDemandMatrix {
    fn from(m: DemandMatrix) -> Self {
        let rates = (0..m.n)
            .map(|i| m.rates[i * m.n..(i + 1) * m.n].to_vec())
            .collect();
        RawDemandMatrix { n: m.n, rates }
    }
}

impl DemandMatrix {
    pub fn zeros(n: usize) -> Self {
        DemandMatrix {
            n,
            rates: vec![0.0; n * n],
        }
    }

    /// Builds a matrix from rows, checking shape only. Use
    /// [`DemandMatrix::validate`] afterwards to check the semantic
    /// invariants.
    pub fn from_rows(n: usize, rows: Vec<Vec<f64>>) -> Result<Self, NetError> {
        if rows.len() != n {
            return Err(NetError::RaggedMatrix {
                row: 0,
                len: rows.len(),
                n,
            });
        }
        let mut rates = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(NetError::RaggedMatrix {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
            rates.extend(row);
        }
        Ok(DemandMatrix { n, rates })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "agent index out of range");
        self.rates[i * self.n + j]
    }

    /// Sets the rate for both directions of the pair `{i, j}`.
    ///
    /// Panics on a self-pair or an out-of-range index.
    pub fn set_rate(&mut self, i: usize, j: usize, rate: f64) {
        assert!(i < self.n && j < self.n, "agent index out of range");
        assert!(i != j, "self-pairs carry no demand");
        self.rates[i * self.n + j] = rate;
        self.rates[j * self.n + i] = rate;
    }

    /// Reports the first violated invariant, scanning rows in order.
    pub fn validate(&self) -> Result<(), DemandViolation> {
        for i in 0..self.n {
            if self.rate(i, i) != 0.0 {
                return Err(DemandViolation::NonzeroDiagonal { i });
            }
            for j in 0..self.n {
                let x = self.rate(i, j);
                if !x.is_finite() {
                    return Err(DemandViolation::NonFinite { i, j });
                }
                if x < 0.0 {
                    return Err(DemandViolation::Negative { i, j });
                }
                if j > i && x != self.rate(j, i) {
                    return Err(DemandViolation::Asymmetric { i, j });
                }
            }
        }
        Ok(())
    }

    /// Unordered pairs with a positive rate, in ascending `(i, j)` order.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let x = self.rate(i, j);
                if x > 0.0 {
                    out.push((i, j, x));
                }
            }
        }
        out
    }

    /// Total demand rate involving agent `v`.
    pub fn row_sum(&self, v: usize) -> f64 {
        (0..self.n).map(|j| self.rate(v, j)).sum()
    }

    /// Sum of rates over unordered pairs.
    pub fn total_pair_rate(&self) -> f64 {
        self.pairs().iter().map(|&(_, _, x)| x).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct RawTopology {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// An undirected simple graph over agents `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTopology", into = "RawTopology")]
pub struct Topology {
    n: usize,
    edges: BTreeSet<Edge>,
}

impl TryFrom<RawTopology> for Topology {
    type Error = NetError;

    fn try_from(raw: RawTopology) -> Result<Self, NetError> {
        Topology::with_edges(raw.n, raw.edges)
    }
}

impl From<Topology> for RawTopology {
    fn from(t: Topology) -> Self {
        RawTopology {
            n: t.n,
            edges: t.edges.iter().map(|e| e.endpoints()).collect(),
        }
    }
}

impl Topology {
    pub fn empty(n: usize) -> Self {
        Topology {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn with_edges(
        n: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, NetError> {
        let mut t = Topology::empty(n);
        for (u, v) in pairs {
            if !t.insert_edge(u, v)? {
                return Err(NetError::DuplicateEdge(u, v));
            }
        }
        Ok(t)
    }

    /// Inserts an edge, returning whether it was new.
    pub fn insert_edge(&mut self, u: usize, v: usize) -> Result<bool, NetError> {
        for a in [u, v] {
            if a >= self.n {
                return Err(NetError::AgentOutOfRange {
                    agent: a,
                    n: self.n,
                });
            }
        }
        Ok(self.edges.insert(Edge::try_new(u, v)?))
    }

    pub fn remove_edge(&mut self, e: Edge) -> bool {
        self.edges.remove(&e)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains_edge(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    /// Neighbor lists in ascending order per agent.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.lo()].push(e.hi());
            adj[e.hi()].push(e.lo());
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.components().len() == 1
    }

    /// Connected with exactly `n - 1` edges.
    pub fn is_spanning_tree(&self) -> bool {
        self.n > 0 && self.edge_count() == self.n - 1 && self.is_connected()
    }

    /// The path `0 - 1 - ... - n-1`.
    pub fn path(n: usize) -> Self {
        let mut t = Topology::empty(n);
        for i in 1..n {
            t.insert_edge(i - 1, i).expect("path edges are valid");
        }
        t
    }

    /// A star with every other agent joined to `center`.
    pub fn star(n: usize, center: usize) -> Result<Self, NetError> {
        if center >= n {
            return Err(NetError::AgentOutOfRange { agent: center, n });
        }
        let mut t = Topology::empty(n);
        for v in 0..n {
            if v != center {
                t.insert_edge(v, center)?;
            }
        }
        Ok(t)
    }

    pub fn complete(n: usize) -> Self {
        let mut t = Topology::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                t.insert_edge(i, j).expect("complete-graph edges are valid");
            }
        }
        t
    }

    /// Decodes a length `n - 2` tree code (entries in `0..n`) into the
    /// spanning tree it names. Every spanning tree over `0..n` has exactly
    /// one code, so iterating codes enumerates trees.
    pub fn from_tree_code(n: usize, code: &[usize]) -> Result<Self, NetError> {
        if n < 2 || code.len() != n - 2 {
            return Err(NetError::BadTreeCode {
                n,
                expected: n.saturating_sub(2),
                got: code.len(),
            });
        }
        let mut degree = vec![1usize; n];
        for &s in code {
            if s >= n {
                return Err(NetError::AgentOutOfRange { agent: s, n });
            }
            degree[s] += 1;
        }
        let mut leaves: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&v| degree[v] == 1).map(Reverse).collect();
        let mut t = Topology::empty(n);
        for &s in code {
            let Reverse(leaf) = leaves.pop().expect("a tree code always leaves a leaf");
            t.insert_edge(leaf, s)?;
            degree[leaf] -= 1;
            degree[s] -= 1;
            if degree[s] == 1 {
                leaves.push(Reverse(s));
            }
        }
        let Reverse(a) = leaves.pop().expect("two leaves remain");
        let Reverse(b) = leaves.pop().expect("two leaves remain");
        t.insert_edge(a, b)?;
        Ok(t)
    }
}

#[derive(Serialize, Deserialize)]
struct RawAllocation {
    edges: Vec<(usize, usize, f64)>,
}

/// Coins parked on each channel: the map edge -> liquidity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawAllocation", into = "RawAllocation")]
pub struct LiquidityAllocation {
    omega: BTreeMap<Edge, f64>,
}

impl TryFrom<RawAllocation> for LiquidityAllocation {
    type Error = NetError;

    fn try_from(raw: RawAllocation) -> Result<Self, NetError> {
        let mut alloc = LiquidityAllocation::new();
        for (u, v, w) in raw.edges {
            alloc.set(Edge::try_new(u, v)?, w)?;
        }
        Ok(alloc)
    }
}

impl From<LiquidityAllocation> for RawAllocation {
    fn from(a: LiquidityAllocation) -> Self {
        RawAllocation {
            edges: a.omega.iter().map(|(e, &w)| (e.lo(), e.hi(), w)).collect(),
        }
    }
}

impl LiquidityAllocation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (Edge, f64)>) -> Result<Self, NetError> {
        let mut alloc = LiquidityAllocation::new();
        for (e, w) in entries {
            alloc.set(e, w)?;
        }
        Ok(alloc)
    }

    pub fn set(&mut self, e: Edge, liquidity: f64) -> Result<(), NetError> {
        if !liquidity.is_finite() || liquidity < 0.0 {
            return Err(NetError::BadLiquidity);
        }
        self.omega.insert(e, liquidity);
        Ok(())
    }

    /// Liquidity on `e`; edges without an entry hold zero coins.
    pub fn get(&self, e: Edge) -> f64 {
        self.omega.get(&e).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.omega.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.omega.iter().map(|(e, &w)| (*e, w))
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// A topology together with the liquidity parked on each of its channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    topology: Topology,
    liquidity: LiquidityAllocation,
}

impl Network {
    /// Bundles a topology with an allocation, rejecting allocations that
    /// mention edges the topology does not have.
    pub fn new(topology: Topology, liquidity: LiquidityAllocation) -> Result<Self, NetError> {
        for (e, _) in liquidity.iter() {
            if !topology.contains_edge(e) {
                return Err(NetError::UnknownEdge(e.lo(), e.hi()));
            }
        }
        Ok(Network {
            topology,
            liquidity,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn liquidity(&self) -> &LiquidityAllocation {
        &self.liquidity
    }

    pub fn total_liquidity(&self) -> f64 {
        self.liquidity.total()
    }
}

/// Prices for keeping a network running: capital interest per coin per
/// second, and a ledger fee per channel reset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    interest_rate: f64,
    record_fee: f64,
}

impl CostParams {
    pub fn new(interest_rate: f64, record_fee: f64) -> Result<Self, NetError> {
        if !(interest_rate.is_finite() && interest_rate > 0.0)
            || !(record_fee.is_finite() && record_fee > 0.0)
        {
            return Err(NetError::BadCostParams);
        }
        Ok(CostParams {
            interest_rate,
            record_fee,
        })
    }

    pub fn interest_rate(&self) -> f64 {
        self.interest_rate
    }

    pub fn record_fee(&self) -> f64 {
        self.record_fee
    }
}

/// The two balances of a channel. Their sum is preserved by transfers;
/// a side that reaches exactly zero triggers a reset in the replay and
/// simulation modules.
///
/// Balances are kept as floats but every replay path works on integer
/// values, where one-coin moves are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    side_a: f64,
    side_b: f64,
}

impl ChannelState {
    pub fn new(side_a: f64, side_b: f64) -> Result<Self, NetError> {
        if !(side_a.is_finite() && side_a >= 0.0 && side_b.is_finite() && side_b >= 0.0) {
            return Err(NetError::BadBalance);
        }
        Ok(ChannelState { side_a, side_b })
    }

    /// Both sides hold half the liquidity.
    pub fn equal_split(liquidity: f64) -> Self {
        debug_assert!(liquidity.is_finite() && liquidity >= 0.0);
        ChannelState {
            side_a: liquidity / 2.0,
            side_b: liquidity / 2.0,
        }
    }

    pub fn side_a(&self) -> f64 {
        self.side_a
    }

    pub fn side_b(&self) -> f64 {
        self.side_b
    }

    pub fn liquidity(&self) -> f64 {
        self.side_a + self.side_b
    }

    /// Moves `amount` coins across the channel.
    pub fn apply(&mut self, amount: f64, a_to_b: bool) {
        if a_to_b {
            self.side_a -= amount;
            self.side_b += amount;
        } else {
            self.side_b -= amount;
            self.side_a += amount;
        }
        debug_assert!(
            self.side_a >= 0.0 && self.side_b >= 0.0,
            "balance went negative"
        );
    }

    /// True once either side is exhausted.
    pub fn is_depleted(&self) -> bool {
        self.side_a == 0.0 || self.side_b == 0.0
    }

    /// Restores the equal split, keeping the liquidity.
    pub fn reset_equal(&mut self) {
        let w = self.liquidity();
        self.side_a = w / 2.0;
        self.side_b = w / 2.0;
    }
}

/// True when a liquidity is a positive even integer, the precondition for
/// replays and simulations that walk balances in exact one-coin steps.
pub(crate) fn is_even_positive(w: f64) -> bool {
    w.is_finite() && w >= 2.0 && w.fract() == 0.0 && (w as u64).is_multiple_of(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_are_canonical() {
        assert_eq!(Edge::new(3, 1), Edge::new(1, 3));
        assert_eq!(Edge::new(3, 1).endpoints(), (1, 3));
        assert_eq!(Edge::new(1, 3).other(1), 3);
        assert!(Edge::try_new(2, 2).is_err());
    }

    #[test]
    fn zero_matrix_validates() {
        assert_eq!(DemandMatrix::zeros(3).validate(), Ok(()));
    }

    #[test]
    fn asymmetry_is_reported_at_first_pair() {
        let m = DemandMatrix::from_rows(2, vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(
            m.validate(),
            Err(DemandViolation::Asymmetric { i: 0, j: 1 })
        );
    }

    #[test]
    fn nonzero_diagonal_is_reported() {
        let m = DemandMatrix::from_rows(2, vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(m.validate(), Err(DemandViolation::NonzeroDiagonal { i: 0 }));
    }

    #[test]
    fn negative_rate_is_reported() {
        let mut m = DemandMatrix::zeros(3);
        m.set_rate(1, 2, -0.5);
        assert_eq!(m.validate(), Err(DemandViolation::Negative { i: 1, j: 2 }));
    }

    #[test]
    fn set_rate_keeps_symmetry() {
        let mut m = DemandMatrix::zeros(4);
        m.set_rate(2, 0, 1.5);
        assert_eq!(m.rate(0, 2), 1.5);
        assert_eq!(m.rate(2, 0), 1.5);
        assert_eq!(m.pairs(), vec![(0, 2, 1.5)]);
        assert_eq!(m.validate(), Ok(()));
    }

    #[test]
    fn path_is_a_spanning_tree() {
        assert!(Topology::path(4).is_spanning_tree());
    }

    #[test]
    fn cycle_is_not_a_spanning_tree() {
        let t = Topology::with_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert!(!t.is_spanning_tree());
    }

    #[test]
    fn forest_is_not_a_spanning_tree() {
        let t = Topology::with_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(!t.is_spanning_tree());
        assert_eq!(t.components().len(), 2);
    }

    #[test]
    fn duplicate_edges_are_rejected() {
        assert_eq!(
            Topology::with_edges(3, [(0, 1), (1, 0)]),
            Err(NetError::DuplicateEdge(1, 0)),
        );
    }

    #[test]
    fn tree_code_round_trips_known_tree() {
        // Code [0, 0] names the star centered at 0 over four agents.
        let t = Topology::from_tree_code(4, &[0, 0]).unwrap();
        assert_eq!(t, Topology::star(4, 0).unwrap());
    }

    #[test]
    fn demand_matrix_json_shape() {
        let mut m = DemandMatrix::zeros(2);
        m.set_rate(0, 1, 2.0);
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"n": 2, "rates": [[0.0, 2.0], [2.0, 0.0]]}),
        );
        let back: DemandMatrix = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn topology_json_shape() {
        let t = Topology::with_edges(3, [(2, 1), (0, 1)]).unwrap();
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json, serde_json::json!({"n": 3, "edges": [[0, 1], [1, 2]]}));
        let back: Topology = serde_json::from_value(json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn allocation_totals() {
        let mut a = LiquidityAllocation::new();
        a.set(Edge::new(0, 1), 2.0).unwrap();
        a.set(Edge::new(1, 2), 3.5).unwrap();
        assert_eq!(a.total(), 5.5);
        assert_eq!(a.get(Edge::new(0, 2)), 0.0);
    }

    #[test]
    fn network_rejects_unknown_edges() {
        let t = Topology::path(3);
        let a = LiquidityAllocation::from_entries([(Edge::new(0, 2), 1.0)]).unwrap();
        assert_eq!(Network::new(t, a), Err(NetError::UnknownEdge(0, 2)));
    }

    #[test]
    fn channel_state_transfers_and_resets() {
        let mut s = ChannelState::equal_split(4.0);
        s.apply(1.0, true);
        assert_eq!((s.side_a(), s.side_b()), (1.0, 3.0));
        assert!(!s.is_depleted());
        s.apply(1.0, true);
        assert!(s.is_depleted());
        s.reset_equal();
        assert_eq!((s.side_a(), s.side_b()), (2.0, 2.0));
    }

    #[test]
    fn removing_any_tree_edge_splits_in_two() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n: usize = rng.gen_range(2..12);
            let code: Vec<usize> = (0..n.saturating_sub(2))
                .map(|_| rng.gen_range(0..n))
                .collect();
            let tree = Topology::from_tree_code(n, &code).unwrap();
            assert!(tree.is_spanning_tree());
            for e in tree.edges().collect::<Vec<_>>() {
                let mut cut = tree.clone();
                assert!(cut.remove_edge(e));
                assert_eq!(cut.components().len(), 2);
            }
        }
    }
}
