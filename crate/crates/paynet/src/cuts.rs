//! Minimum cuts over the demand graph and the cut tree built from them.
//!
//! The demand matrix doubles as an undirected capacitated graph: each
//! positive-rate pair is an edge whose capacity is its rate. The cut tree
//! stores every pairwise minimum cut compactly, and its topology is the
//! spanning tree that minimizes the summed image of the tree-edge cut
//! capacities under any nondecreasing objective.

use crate::net::{DemandMatrix, Edge, NetError, Topology};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// Residual capacity below this is treated as exhausted during augmentation.
const CAP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CutError {
    #[error("cut endpoints must differ")]
    IdenticalEndpoints,
    #[error("agent {agent} out of range for {n} agents")]
    AgentOutOfRange { agent: usize, n: usize },
    #[error("need at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Flow network over the demand graph. Each undirected edge becomes a pair
/// of arcs, each carrying the full capacity; pushing flow on one arc frees
/// residual on its partner, which is the standard undirected reduction.
struct FlowNetwork {
    n: usize,
    to: Vec<usize>,
    cap: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn from_demand(demand: &DemandMatrix) -> Self {
        let n = demand.n();
        let mut net = FlowNetwork {
            n,
            to: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); n],
        };
        for (i, j, lambda) in demand.pairs() {
            let arc = net.to.len();
            net.to.push(j);
            net.cap.push(lambda);
            net.adj[i].push(arc);
            net.to.push(i);
            net.cap.push(lambda);
            net.adj[j].push(arc + 1);
        }
        net
    }

    /// Shortest-augmenting-path max flow.
    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let mut prev_arc = vec![usize::MAX; self.n];
            let mut visited = vec![false; self.n];
            visited[s] = true;
            let mut queue = VecDeque::from([s]);
            'bfs: while let Some(u) = queue.pop_front() {
                for &arc in &self.adj[u] {
                    let w = self.to[arc];
                    if !visited[w] && self.cap[arc] > CAP_EPS {
                        visited[w] = true;
                        prev_arc[w] = arc;
                        if w == t {
                            break 'bfs;
                        }
                        queue.push_back(w);
                    }
                }
            }
            if !visited[t] {
                return total;
            }
            let mut bottleneck = f64::INFINITY;
            let mut v = t;
            while v != s {
                let arc = prev_arc[v];
                bottleneck = bottleneck.min(self.cap[arc]);
                v = self.to[arc ^ 1];
            }
            let mut v = t;
            while v != s {
                let arc = prev_arc[v];
                self.cap[arc] -= bottleneck;
                self.cap[arc ^ 1] += bottleneck;
                v = self.to[arc ^ 1];
            }
            total += bottleneck;
        }
    }

    /// Vertices reachable from `s` in the residual graph.
    fn source_side(&self, s: usize) -> Vec<bool> {
        let mut side = vec![false; self.n];
        side[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &arc in &self.adj[u] {
                let w = self.to[arc];
                if !side[w] && self.cap[arc] > CAP_EPS {
                    side[w] = true;
                    queue.push_back(w);
                }
            }
        }
        side
    }
}

/// A minimum s-t cut: its capacity and the source-side vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub value: f64,
    pub side: BTreeSet<usize>,
}

/// Minimum cut separating `s` from `t` in the demand graph. The returned
/// side contains `s`, and the value is the exact demand crossing the split.
pub fn min_cut(demand: &DemandMatrix, s: usize, t: usize) -> Result<MinCut, CutError> {
    let n = demand.n();
    for a in [s, t] {
        if a >= n {
            return Err(CutError::AgentOutOfRange { agent: a, n });
        }
    }
    if s == t {
        return Err(CutError::IdenticalEndpoints);
    }
    let mut net = FlowNetwork::from_demand(demand);
    net.max_flow(s, t);
    let mask = net.source_side(s);
    // Summing the crossing demand directly avoids accumulated flow error.
    let value = demand
        .pairs()
        .into_iter()
        .filter(|&(i, j, _)| mask[i] != mask[j])
        .map(|(_, _, x)| x)
        .sum();
    let side = (0..n).filter(|&v| mask[v]).collect();
    Ok(MinCut { value, side })
}

#[derive(Serialize, Deserialize)]
struct RawCutTree {
    edges: Vec<(usize, usize, f64)>,
}

/// A spanning tree whose edges are labeled with cut capacities. For any
/// two agents, the smallest label on their tree path equals their minimum
/// cut in the demand graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCutTree", into = "RawCutTree")]
pub struct CutTree {
    tree: Topology,
    values: BTreeMap<Edge, f64>,
}

impl TryFrom<RawCutTree> for CutTree {
    type Error = CutError;

    fn try_from(raw: RawCutTree) -> Result<Self, CutError> {
        let n = raw.edges.len() + 1;
        let mut tree = Topology::empty(n);
        let mut values = BTreeMap::new();
        for (u, v, x) in raw.edges {
            tree.insert_edge(u, v)?;
            values.insert(Edge::try_new(u, v)?, x);
        }
        if !tree.is_spanning_tree() {
            return Err(CutError::TooFewAgents(n));
        }
        Ok(CutTree { tree, values })
    }
}

impl From<CutTree> for RawCutTree {
    fn from(ct: CutTree) -> Self {
        RawCutTree {
            edges: ct
                .values
                .iter()
                .map(|(e, &x)| (e.lo(), e.hi(), x))
                .collect(),
        }
    }
}

impl CutTree {
    pub fn topology(&self) -> &Topology {
        &self.tree
    }

    pub fn into_topology(self) -> Topology {
        self.tree
    }

    pub fn value(&self, e: Edge) -> Option<f64> {
        self.values.get(&e).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, f64)> + '_ {
        self.values.iter().map(|(e, &x)| (*e, x))
    }

    /// Minimum edge label on the tree path between `s` and `t`.
    pub fn min_on_path(&self, s: usize, t: usize) -> Result<f64, CutError> {
        let n = self.tree.n();
        for a in [s, t] {
            if a >= n {
                return Err(CutError::AgentOutOfRange { agent: a, n });
            }
        }
        if s == t {
            return Err(CutError::IdenticalEndpoints);
        }
        let adj = self.tree.adjacency();
        let mut parent = vec![usize::MAX; n];
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if parent[w] == usize::MAX {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        let mut best = f64::INFINITY;
        let mut v = t;
        while v != s {
            let e = Edge::new(v, parent[v]);
            best = best.min(self.values[&e]);
            v = parent[v];
        }
        Ok(best)
    }
}

/// Builds the cut tree with `n - 1` max-flow calls and no graph
/// contraction: every agent keeps a tentative parent, each round computes
/// the min cut to the parent, and agents on the near side of the cut are
/// re-parented (with the classic swap when the parent's own parent lands
/// on the near side, which is what makes the result a genuine cut tree).
pub fn gomory_hu(demand: &DemandMatrix) -> Result<CutTree, CutError> {
    let n = demand.n();
    if n < 2 {
        return Err(CutError::TooFewAgents(n));
    }
    let mut parent = vec![0usize; n];
    let mut value = vec![0.0f64; n];
    for s in 1..n {
        let t = parent[s];
        let cut = min_cut(demand, s, t)?;
        value[s] = cut.value;
        let near: Vec<bool> = {
            let mut mask = vec![false; n];
            for &v in &cut.side {
                mask[v] = true;
            }
            mask
        };
        for v in 0..n {
            if v != s && near[v] && parent[v] == t {
                parent[v] = s;
            }
        }
        if near[parent[t]] {
            parent[s] = parent[t];
            parent[t] = s;
            value[s] = value[t];
            value[t] = cut.value;
        }
    }
    let mut tree = Topology::empty(n);
    let mut values = BTreeMap::new();
    for s in 1..n {
        tree.insert_edge(s, parent[s])?;
        values.insert(Edge::try_new(s, parent[s])?, value[s]);
    }
    Ok(CutTree { tree, values })
}

/// The cut-tree topology, which minimizes the sum of `g(rate)` over tree
/// channels for every nondecreasing `g` once the tree carries the demand.
pub fn optimal_spanning_tree(demand: &DemandMatrix) -> Result<Topology, CutError> {
    Ok(gomory_hu(demand)?.into_topology())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demand_with(n: usize, entries: &[(usize, usize, f64)]) -> DemandMatrix {
        let mut m = DemandMatrix::zeros(n);
        for &(i, j, x) in entries {
            m.set_rate(i, j, x);
        }
        m
    }

    #[test]
    fn two_agents_cut_is_their_rate() {
        let demand = demand_with(2, &[(0, 1, 3.0)]);
        let cut = min_cut(&demand, 0, 1).unwrap();
        assert_eq!(cut.value, 3.0);
        assert_eq!(cut.side, BTreeSet::from([0]));
    }

    #[test]
    fn chain_demand_cut_picks_the_weak_link() {
        let demand = demand_with(3, &[(0, 1, 2.0), (1, 2, 1.0)]);
        let cut = min_cut(&demand, 0, 2).unwrap();
        assert_eq!(cut.value, 1.0);
        assert_eq!(cut.side, BTreeSet::from([0, 1]));
    }

    #[test]
    fn min_cut_value_is_symmetric() {
        let demand = demand_with(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (0, 3, 1.5)]);
        for s in 0..4 {
            for t in 0..4 {
                if s == t {
                    continue;
                }
                let a = min_cut(&demand, s, t).unwrap().value;
                let b = min_cut(&demand, t, s).unwrap().value;
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn min_cut_rejects_bad_endpoints() {
        let demand = demand_with(2, &[(0, 1, 1.0)]);
        assert_eq!(min_cut(&demand, 0, 0), Err(CutError::IdenticalEndpoints));
        assert_eq!(
            min_cut(&demand, 0, 5),
            Err(CutError::AgentOutOfRange { agent: 5, n: 2 }),
        );
    }

    #[test]
    fn uniform_three_agents_cut_tree() {
        // Unit demand on all three pairs: every singleton cut has value 2.
        let demand = demand_with(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]);
        let ct = gomory_hu(&demand).unwrap();
        let values: Vec<f64> = ct.iter().map(|(_, x)| x).collect();
        assert_eq!(values, vec![2.0, 2.0]);
        for s in 0..3 {
            for t in s + 1..3 {
                assert_eq!(ct.min_on_path(s, t).unwrap(), 2.0);
            }
        }
    }

    #[test]
    fn disjoint_pairs_cut_tree_keeps_pair_edges() {
        let demand = demand_with(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let ct = gomory_hu(&demand).unwrap();
        assert!(ct.topology().contains_edge(Edge::new(0, 1)));
        assert!(ct.topology().contains_edge(Edge::new(2, 3)));
        assert_eq!(ct.value(Edge::new(0, 1)), Some(1.0));
        assert_eq!(ct.value(Edge::new(2, 3)), Some(1.0));
        // The connector between the pairs crosses no demand.
        let connector = ct
            .iter()
            .find(|(e, _)| !(e == &Edge::new(0, 1) || e == &Edge::new(2, 3)))
            .unwrap();
        assert_eq!(connector.1, 0.0);
        assert_eq!(ct.min_on_path(0, 3).unwrap(), 0.0);
    }

    #[test]
    fn optimal_tree_for_disjoint_pairs_contains_both_pairs() {
        let demand = demand_with(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let tree = optimal_spanning_tree(&demand).unwrap();
        assert!(tree.is_spanning_tree());
        assert!(tree.contains_edge(Edge::new(0, 1)));
        assert!(tree.contains_edge(Edge::new(2, 3)));
    }

    #[test]
    fn uniform_three_agent_tree_objective() {
        use crate::routing::tree_rates_by_cuts;
        let demand = demand_with(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]);
        let tree = optimal_spanning_tree(&demand).unwrap();
        let rates = tree_rates_by_cuts(&tree, &demand).unwrap();
        // Any spanning tree ties here: two channels of rate 2.
        assert!((rates.cbrt_sum() - 2.0 * 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn cut_tree_json_round_trip() {
        let demand = demand_with(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]);
        let ct = gomory_hu(&demand).unwrap();
        let json = serde_json::to_value(&ct).unwrap();
        let back: CutTree = serde_json::from_value(json).unwrap();
        assert_eq!(back, ct);
    }

    #[test]
    fn gomory_hu_needs_two_agents() {
        assert_eq!(
            gomory_hu(&DemandMatrix::zeros(1)),
            Err(CutError::TooFewAgents(1))
        );
    }
}
