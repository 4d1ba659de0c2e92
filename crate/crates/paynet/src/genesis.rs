//! Scale-free demand synthesis.
//!
//! Draws a degree sequence from a truncated discrete power law, wires it
//! up with the configuration model (discarding self-loops and duplicate
//! pairings), patches the result to a single connected component, and
//! prices every demanded pair with an independent Pareto rate. The output
//! is a plain demand matrix; the demand graph is its nonzero pattern.

use crate::net::{DemandMatrix, Edge, NetError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenesisError {
    #[error("need at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("power-law exponents must be finite and greater than one")]
    BadExponent,
    #[error("rate floor must be positive and finite")]
    BadRateMin,
    #[error("no even-sum degree sequence after {0} attempts")]
    DegreeSequenceInfeasible(usize),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Recipe for one synthetic demand matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenesisConfig {
    pub n: usize,
    /// Exponent of the degree distribution: P(d) proportional to
    /// d^(-degree_exponent) on 1..n-1.
    pub degree_exponent: f64,
    /// Exponent of the rate density: f(x) proportional to
    /// x^(-rate_exponent) above the floor.
    pub rate_exponent: f64,
    pub rate_min: f64,
    pub seed: u64,
}

impl GenesisConfig {
    pub fn validate(&self) -> Result<(), GenesisError> {
        if self.n < 2 {
            return Err(GenesisError::TooFewAgents(self.n));
        }
        for exp in [self.degree_exponent, self.rate_exponent] {
            if !exp.is_finite() || exp <= 1.0 {
                return Err(GenesisError::BadExponent);
            }
        }
        if !self.rate_min.is_finite() || self.rate_min <= 0.0 {
            return Err(GenesisError::BadRateMin);
        }
        Ok(())
    }
}

const RESAMPLE_ATTEMPTS: usize = 100;

/// Draws one degree from the truncated distribution by inverting the
/// cumulative weights.
fn sample_degree(cumulative: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cumulative.last().expect("support is non-empty");
    let u = rng.gen_range(0.0..total);
    // First index whose cumulative weight exceeds the draw.
    let idx = cumulative.partition_point(|&c| c <= u);
    idx + 1
}

/// Generates a connected scale-free demand matrix.
pub fn generate(config: &GenesisConfig) -> Result<DemandMatrix, GenesisError> {
    config.validate()?;
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Degree weights d^(-gamma) for d in 1..=n-1, cumulative for inversion.
    let mut cumulative = Vec::with_capacity(n - 1);
    let mut acc = 0.0;
    for d in 1..n {
        acc += (d as f64).powf(-config.degree_exponent);
        cumulative.push(acc);
    }

    let mut degrees = vec![0usize; n];
    let mut feasible = false;
    for _ in 0..RESAMPLE_ATTEMPTS {
        for slot in degrees.iter_mut() {
            *slot = sample_degree(&cumulative, &mut rng);
        }
        if degrees.iter().sum::<usize>() % 2 == 0 {
            feasible = true;
            break;
        }
    }
    if !feasible {
        return Err(GenesisError::DegreeSequenceInfeasible(RESAMPLE_ATTEMPTS));
    }

    // Configuration model: shuffle stubs, pair them off, keep simple edges.
    let mut stubs = Vec::with_capacity(degrees.iter().sum());
    for (v, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat_n(v, d));
    }
    stubs.shuffle(&mut rng);
    let mut edges = BTreeSet::new();
    for pair in stubs.chunks_exact(2) {
        if pair[0] != pair[1] {
            edges.insert(Edge::new(pair[0], pair[1]));
        }
    }

    // Patch to one component: chain each component's smallest vertex to
    // the previous component's.
    let mut label = vec![usize::MAX; n];
    let mut adjacency = vec![Vec::new(); n];
    for e in &edges {
        adjacency[e.lo()].push(e.hi());
        adjacency[e.hi()].push(e.lo());
    }
    let mut representatives = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        representatives.push(start);
        let id = representatives.len() - 1;
        let mut stack = vec![start];
        label[start] = id;
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if label[w] == usize::MAX {
                    label[w] = id;
                    stack.push(w);
                }
            }
        }
    }
    for pair in representatives.windows(2) {
        edges.insert(Edge::new(pair[0], pair[1]));
    }

    // Independent heavy-tailed rate per demanded pair. The Pareto shape is
    // one less than the density exponent: f(x) ~ x^(-(shape+1)).
    let pareto =
        Pareto::new(config.rate_min, config.rate_exponent - 1.0).expect("validated parameters");
    let mut demand = DemandMatrix::zeros(n);
    for e in &edges {
        demand.set_rate(e.lo(), e.hi(), pareto.sample(&mut rng));
    }
    Ok(demand)
}
