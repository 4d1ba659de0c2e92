//! Routing policies and the per-channel transfer rates they induce.
//!
//! A policy fixes one simple path per unordered agent pair and serves both
//! directions with it, so under symmetric demand each channel sees balanced
//! traffic. The rate a channel carries is the sum of the demands whose
//! route crosses it.

use crate::net::{DemandMatrix, Edge, NetError, Topology};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("topology is not a spanning tree")]
    NotASpanningTree,
    #[error("hub center {center} out of range for {n} agents")]
    CenterOutOfRange { center: usize, n: usize },
    #[error("no route stored for pair ({0}, {1})")]
    UnroutablePair(usize, usize),
    #[error("route crosses edge ({0}, {1}) that is absent from the topology")]
    MissingEdge(usize, usize),
    #[error("route for pair ({0}, {1}) is not a simple path")]
    NotASimplePath(usize, usize),
    #[error("route endpoint {agent} out of range for {n} agents")]
    RouteOutOfRange { agent: usize, n: usize },
    #[error("demand covers {demand} agents but the topology has {topology}")]
    AgentCountMismatch { demand: usize, topology: usize },
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Serialize, Deserialize)]
struct RawPolicy {
    paths: Vec<((usize, usize), Vec<usize>)>,
}

/// One simple path per unordered pair, stored as the vertex sequence from
/// the smaller endpoint to the larger one. The reverse direction walks the
/// same vertices backwards, so `path(i, j)` is always the reverse of
/// `path(j, i)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy", into = "RawPolicy")]
pub struct RoutingPolicy {
    paths: BTreeMap<(usize, usize), Vec<usize>>,
}

impl TryFrom<RawPolicy> for RoutingPolicy {
    type Error = RoutingError;

    fn try_from(raw: RawPolicy) -> Result<Self, RoutingError> {
        let mut policy = RoutingPolicy::default();
        for (pair, path) in raw.paths {
            let stored = policy.insert_path(path)?;
            if stored != pair {
                return Err(RoutingError::UnroutablePair(pair.0, pair.1));
            }
        }
        Ok(policy)
    }
}

impl From<RoutingPolicy> for RawPolicy {
    fn from(p: RoutingPolicy) -> Self {
        RawPolicy {
            paths: p.paths.into_iter().collect(),
        }
    }
}

impl RoutingPolicy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores a path under the pair of its endpoints, replacing any
    /// previous path for that pair. Returns the pair key.
    pub fn insert_path(&mut self, mut path: Vec<usize>) -> Result<(usize, usize), RoutingError> {
        if path.len() < 2 {
            let (&a, &b) = (path.first().unwrap_or(&0), path.last().unwrap_or(&0));
            return Err(RoutingError::NotASimplePath(a, b));
        }
        let (first, last) = (path[0], path[path.len() - 1]);
        let mut seen = path.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(RoutingError::NotASimplePath(first, last));
        }
        if first > last {
            path.reverse();
        }
        let key = (first.min(last), first.max(last));
        self.paths.insert(key, path);
        Ok(key)
    }

    /// The route from `src` to `dst`, if one is stored for the pair.
    pub fn path(&self, src: usize, dst: usize) -> Option<Vec<usize>> {
        if src == dst {
            return None;
        }
        let key = (src.min(dst), src.max(dst));
        let stored = self.paths.get(&key)?;
        if src == key.0 {
            Some(stored.clone())
        } else {
            let mut rev = stored.clone();
            rev.reverse();
            Some(rev)
        }
    }

    pub fn has_pair(&self, i: usize, j: usize) -> bool {
        self.paths.contains_key(&(i.min(j), i.max(j)))
    }

    /// Stored pairs and their forward paths, ascending by pair.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &[usize])> + '_ {
        self.paths.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Checks that every positive-rate pair has a route.
    pub fn covers(&self, demand: &DemandMatrix) -> Result<(), RoutingError> {
        for (i, j, _) in demand.pairs() {
            if !self.has_pair(i, j) {
                return Err(RoutingError::UnroutablePair(i, j));
            }
        }
        Ok(())
    }
}

/// Transfer rate carried by each channel under some policy and demand.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeRates {
    rate: BTreeMap<Edge, f64>,
}

impl EdgeRates {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, e: Edge, rate: f64) {
        self.rate.insert(e, rate);
    }

    /// Rate on `e`; edges without an entry carry nothing.
    pub fn get(&self, e: Edge) -> f64 {
        self.rate.get(&e).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.rate.iter().map(|(e, &x)| (*e, x))
    }

    pub fn len(&self) -> usize {
        self.rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rate.is_empty()
    }

    /// Number of channels carrying positive rate.
    pub fn active_count(&self) -> usize {
        self.rate.values().filter(|&&x| x > 0.0).count()
    }

    pub fn total(&self) -> f64 {
        self.rate.values().sum()
    }

    /// Sum of cube roots of the positive rates. This is the quantity the
    /// optimal allocation and cost formulas are built from.
    pub fn cbrt_sum(&self) -> f64 {
        self.rate
            .values()
            .filter(|&&x| x > 0.0)
            .map(|x| x.cbrt())
            .sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.rate.values().all(|&x| x == 0.0)
    }
}

/// Routes every positive-rate pair along its unique tree path.
pub fn tree_routing(tree: &Topology, demand: &DemandMatrix) -> Result<RoutingPolicy, RoutingError> {
    if !tree.is_spanning_tree() {
        return Err(RoutingError::NotASpanningTree);
    }
    if demand.n() != tree.n() {
        return Err(RoutingError::AgentCountMismatch {
            demand: demand.n(),
            topology: tree.n(),
        });
    }
    let n = tree.n();
    let adj = tree.adjacency();
    let mut policy = RoutingPolicy::new();
    for i in 0..n {
        let targets: Vec<usize> = (i + 1..n).filter(|&j| demand.rate(i, j) > 0.0).collect();
        if targets.is_empty() {
            continue;
        }
        // Parent pointers from a BFS rooted at i give every tree path at once.
        let mut parent = vec![usize::MAX; n];
        parent[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if parent[w] == usize::MAX {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        for j in targets {
            let mut rev = vec![j];
            let mut v = j;
            while v != i {
                v = parent[v];
                rev.push(v);
            }
            rev.reverse();
            policy.insert_path(rev)?;
        }
    }
    Ok(policy)
}

/// Routes every pair through `center`: two hops for outside pairs, one hop
/// for pairs that include the center itself.
pub fn hub_routing(n: usize, center: usize) -> Result<RoutingPolicy, RoutingError> {
    if center >= n {
        return Err(RoutingError::CenterOutOfRange { center, n });
    }
    let mut policy = RoutingPolicy::new();
    for i in 0..n {
        for j in i + 1..n {
            let path = if i == center || j == center {
                vec![i, j]
            } else {
                vec![i, center, j]
            };
            policy.insert_path(path)?;
        }
    }
    Ok(policy)
}

/// Routes every positive-rate pair over its own direct channel.
pub fn direct_routing(demand: &DemandMatrix) -> RoutingPolicy {
    let mut policy = RoutingPolicy::new();
    for (i, j, _) in demand.pairs() {
        policy
            .insert_path(vec![i, j])
            .expect("a demand pair is a valid direct path");
    }
    policy
}

/// Breadth-first shortest paths for every connected pair, with ties broken
/// toward lower agent indices. A generic fallback policy for topologies
/// that are neither trees nor stars.
pub fn shortest_path_routing(topology: &Topology) -> RoutingPolicy {
    let n = topology.n();
    let adj = topology.adjacency();
    let mut policy = RoutingPolicy::new();
    for i in 0..n {
        let mut parent = vec![usize::MAX; n];
        parent[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if parent[w] == usize::MAX {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        for j in i + 1..n {
            if parent[j] == usize::MAX {
                continue;
            }
            let mut rev = vec![j];
            let mut v = j;
            while v != i {
                v = parent[v];
                rev.push(v);
            }
            rev.reverse();
            policy.insert_path(rev).expect("BFS paths are simple");
        }
    }
    policy
}

/// Accumulates, per channel, the demand of every pair whose route crosses
/// it. Topology edges crossed by no route get an explicit zero.
pub fn edge_rates(
    topology: &Topology,
    policy: &RoutingPolicy,
    demand: &DemandMatrix,
) -> Result<EdgeRates, RoutingError> {
    if demand.n() != topology.n() {
        return Err(RoutingError::AgentCountMismatch {
            demand: demand.n(),
            topology: topology.n(),
        });
    }
    let mut rates = EdgeRates::new();
    for e in topology.edges() {
        rates.insert(e, 0.0);
    }
    for (i, j, lambda) in demand.pairs() {
        let path = policy
            .path(i, j)
            .ok_or(RoutingError::UnroutablePair(i, j))?;
        for w in path.windows(2) {
            for &v in w {
                if v >= topology.n() {
                    return Err(RoutingError::RouteOutOfRange {
                        agent: v,
                        n: topology.n(),
                    });
                }
            }
            let e = Edge::try_new(w[0], w[1])?;
            if !topology.contains_edge(e) {
                return Err(RoutingError::MissingEdge(e.lo(), e.hi()));
            }
            rates.insert(e, rates.get(e) + lambda);
        }
    }
    Ok(rates)
}

/// Channel rates on a spanning tree, computed from cuts instead of routes:
/// dropping a tree edge splits the agents in two, and the edge carries
/// exactly the demand crossing that split.
pub fn tree_rates_by_cuts(
    tree: &Topology,
    demand: &DemandMatrix,
) -> Result<EdgeRates, RoutingError> {
    if !tree.is_spanning_tree() {
        return Err(RoutingError::NotASpanningTree);
    }
    if demand.n() != tree.n() {
        return Err(RoutingError::AgentCountMismatch {
            demand: demand.n(),
            topology: tree.n(),
        });
    }
    let n = tree.n();
    let pairs = demand.pairs();
    let mut rates = EdgeRates::new();
    for e in tree.edges().collect::<Vec<_>>() {
        let mut cut = tree.clone();
        cut.remove_edge(e);
        let mut side = vec![false; n];
        for v in &cut.components()[0] {
            side[*v] = true;
        }
        // components()[0] is the component containing agent 0; which side
        // is which does not matter for the crossing sum.
        let lambda = pairs
            .iter()
            .filter(|&&(i, j, _)| side[i] != side[j])
            .map(|&(_, _, x)| x)
            .sum();
        rates.insert(e, lambda);
    }
    Ok(rates)
}
