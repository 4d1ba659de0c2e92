//! Event-driven traffic simulation.
//!
//! Each demanded pair fires transfers as a Poisson process at twice its
//! pair rate, with the direction of every transfer drawn uniformly; that
//! is exactly two opposing streams at the pair rate. Events merge into one
//! global queue, so a run is an exact sample of the jump process, not a
//! time-stepped approximation. Transfers move one coin along their route,
//! and any channel whose side empties resets to the equal split on the
//! spot, counting one record.
//!
//! Runs are deterministic: every pair draws from its own stream of the
//! seeded generator, so the event sequence is a pure function of the
//! configuration no matter how results are later aggregated.

use crate::net::{ChannelState, DemandMatrix, Edge, NetError, Network};
use crate::routing::{RoutingError, RoutingPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("horizon must be positive and finite")]
    BadHorizon,
    #[error("a reset target needs at least one demanded pair")]
    NoTraffic,
    #[error("channel ({0}, {1}) liquidity must be a positive even integer")]
    OddLiquidity(usize, usize),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// When a run stops: after a fixed simulated time, or once a total number
/// of resets has been recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Time(f64),
    Resets(u64),
}

/// Everything a run depends on. Identical configs give bit-identical
/// results.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub network: Network,
    pub policy: RoutingPolicy,
    pub demand: DemandMatrix,
    pub horizon: Horizon,
    pub seed: u64,
}

/// What a run produced: reset counts per channel, every reset's timestamp
/// in order, the simulated time covered and the number of transfers.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    resets: BTreeMap<Edge, u64>,
    reset_times: Vec<f64>,
    elapsed: f64,
    transfers: u64,
}

impl SimResult {
    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    pub fn transfers(&self) -> u64 {
        self.transfers
    }

    pub fn total_resets(&self) -> u64 {
        self.reset_times.len() as u64
    }

    pub fn resets(&self, e: Edge) -> u64 {
        self.resets.get(&e).copied().unwrap_or(0)
    }

    pub fn reset_counts(&self) -> impl Iterator<Item = (Edge, u64)> + '_ {
        self.resets.iter().map(|(&e, &k)| (e, k))
    }

    pub fn reset_times(&self) -> &[f64] {
        &self.reset_times
    }

    /// Observed mean time between resets on `e`; `None` before the first
    /// reset.
    pub fn mean_lifetime(&self, e: Edge) -> Option<f64> {
        match self.resets(e) {
            0 => None,
            k => Some(self.elapsed / k as f64),
        }
    }

    /// One row per channel: `edge,u,v,resets,elapsed,rps,mean_lifetime`.
    /// Channels that never reset print empty rps and lifetime fields.
    pub fn write_csv(&self, mut writer: impl Write) -> io::Result<()> {
        writeln!(writer, "edge,u,v,resets,elapsed,rps,mean_lifetime")?;
        for (idx, (e, &k)) in self.resets.iter().enumerate() {
            if k == 0 {
                writeln!(writer, "{idx},{},{},0,{},,", e.lo(), e.hi(), self.elapsed)?;
            } else {
                let rps = k as f64 / self.elapsed;
                let life = self.elapsed / k as f64;
                writeln!(
                    writer,
                    "{idx},{},{},{k},{},{rps},{life}",
                    e.lo(),
                    e.hi(),
                    self.elapsed,
                )?;
            }
        }
        Ok(())
    }
}

/// Records-per-second estimates from one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RpsEstimate {
    /// Channels with at least one reset, in edge order.
    pub per_edge: Vec<EdgeRps>,
    /// Channels that never reset: unmeasured, not zero.
    pub unmeasured: Vec<(usize, usize)>,
    pub total_rps: f64,
    /// 95% half-width on the total, from equal-time batch means.
    pub half_width: f64,
    pub batches: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeRps {
    pub u: usize,
    pub v: usize,
    pub resets: u64,
    pub rps: f64,
    pub mean_lifetime: f64,
}

const BATCHES: usize = 20;
const Z_95: f64 = 1.96;

/// Per-channel and total reset rates for a run. The total's confidence
/// half-width comes from splitting the run into equal-time batches; with
/// fewer resets than batches it is reported as infinite.
pub fn estimate_rps(result: &SimResult) -> RpsEstimate {
    let mut per_edge = Vec::new();
    let mut unmeasured = Vec::new();
    for (e, k) in result.reset_counts() {
        if k == 0 {
            unmeasured.push((e.lo(), e.hi()));
        } else {
            per_edge.push(EdgeRps {
                u: e.lo(),
                v: e.hi(),
                resets: k,
                rps: k as f64 / result.elapsed,
                mean_lifetime: result.elapsed / k as f64,
            });
        }
    }
    let total = result.total_resets();
    let total_rps = total as f64 / result.elapsed;
    let half_width = if (total as usize) < BATCHES {
        f64::INFINITY
    } else {
        let width = result.elapsed / BATCHES as f64;
        let mut counts = [0u64; BATCHES];
        for &t in result.reset_times() {
            let b = ((t / width) as usize).min(BATCHES - 1);
            counts[b] += 1;
        }
        let means: Vec<f64> = counts.iter().map(|&c| c as f64 / width).collect();
        let mean = means.iter().sum::<f64>() / BATCHES as f64;
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
        Z_95 * (var / BATCHES as f64).sqrt()
    };
    RpsEstimate {
        per_edge,
        unmeasured,
        total_rps,
        half_width,
        batches: BATCHES,
    }
}

/// A pending transfer for one pair's process. Ordered so the binary heap
/// pops the earliest time, breaking ties by pair index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    pair: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap and we want the minimum.
        other
            .time
            .partial_cmp(&self.time)
            .expect("event times are finite")
            .then_with(|| other.pair.cmp(&self.pair))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct PairProcess {
    rng: ChaCha8Rng,
    arrivals: Exp<f64>,
    // (channel index, forward transfer moves the low side out).
    route: Vec<(usize, bool)>,
}

/// Runs one simulation to its horizon.
pub fn simulate(config: &SimConfig) -> Result<SimResult, SimError> {
    config.demand.validate().map_err(NetError::from)?;
    let topology = config.network.topology();
    if config.demand.n() != topology.n() {
        return Err(RoutingError::AgentCountMismatch {
            demand: config.demand.n(),
            topology: topology.n(),
        }
        .into());
    }
    match config.horizon {
        Horizon::Time(h) if h.is_finite() && h > 0.0 => {}
        Horizon::Resets(k) if k > 0 => {}
        _ => return Err(SimError::BadHorizon),
    }
    let edges: Vec<Edge> = topology.edges().collect();
    let mut states = Vec::with_capacity(edges.len());
    let mut index = BTreeMap::new();
    for (idx, &e) in edges.iter().enumerate() {
        let w = config.network.liquidity().get(e);
        if !crate::net::is_even_positive(w) {
            return Err(SimError::OddLiquidity(e.lo(), e.hi()));
        }
        states.push(ChannelState::equal_split(w));
        index.insert(e, idx);
    }

    let demanded = config.demand.pairs();
    if demanded.is_empty() {
        return match config.horizon {
            Horizon::Time(h) => Ok(SimResult {
                resets: edges.iter().map(|&e| (e, 0)).collect(),
                reset_times: Vec::new(),
                elapsed: h,
                transfers: 0,
            }),
            Horizon::Resets(_) => Err(SimError::NoTraffic),
        };
    }

    let mut pairs = Vec::with_capacity(demanded.len());
    let mut queue = BinaryHeap::with_capacity(demanded.len());
    for (p, &(i, j, lambda)) in demanded.iter().enumerate() {
        let path = config
            .policy
            .path(i, j)
            .ok_or(RoutingError::UnroutablePair(i, j))?;
        let mut route = Vec::with_capacity(path.len() - 1);
        for w in path.windows(2) {
            let e = Edge::try_new(w[0], w[1]).map_err(RoutingError::from)?;
            let idx = *index
                .get(&e)
                .ok_or(RoutingError::MissingEdge(e.lo(), e.hi()))?;
            route.push((idx, w[0] == e.lo()));
        }
        // Stream 0 is left unused so pair streams start at 1.
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(p as u64 + 1);
        let arrivals = Exp::new(2.0 * lambda).expect("pair rates are positive");
        let mut process = PairProcess {
            rng,
            arrivals,
            route,
        };
        let first = process.arrivals.sample(&mut process.rng);
        queue.push(Event {
            time: first,
            pair: p,
        });
        pairs.push(process);
    }

    let mut resets: BTreeMap<Edge, u64> = edges.iter().map(|&e| (e, 0)).collect();
    let mut reset_times = Vec::new();
    let mut transfers = 0u64;
    let elapsed = loop {
        let Event { time, pair } = queue.pop().expect("queue never drains");
        if let Horizon::Time(h) = config.horizon {
            if time > h {
                break h;
            }
        }
        let process = &mut pairs[pair];
        let forward = process.rng.gen_bool(0.5);
        transfers += 1;
        for k in 0..process.route.len() {
            let (idx, lo_to_hi) = if forward {
                process.route[k]
            } else {
                let (idx, dir) = process.route[process.route.len() - 1 - k];
                (idx, !dir)
            };
            let state = &mut states[idx];
            state.apply(1.0, lo_to_hi);
            if state.is_depleted() {
                state.reset_equal();
                *resets.get_mut(&edges[idx]).expect("edge indexed") += 1;
                reset_times.push(time);
            }
        }
        if let Horizon::Resets(target) = config.horizon {
            if reset_times.len() as u64 >= target {
                break time;
            }
        }
        let gap = process.arrivals.sample(&mut process.rng);
        queue.push(Event {
            time: time + gap,
            pair,
        });
    };

    Ok(SimResult {
        resets,
        reset_times,
        elapsed,
        transfers,
    })
}

/// Time until a single channel with the given starting balance and pair
/// rate first empties a side. Transfers arrive at twice the rate with
/// uniform direction, as in `simulate`.
pub fn first_depletion_time(initial: ChannelState, rate: f64, seed: u64) -> f64 {
    debug_assert!(rate > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let arrivals = Exp::new(2.0 * rate).expect("rate is positive");
    let mut state = initial;
    let mut t = 0.0;
    while !state.is_depleted() {
        t += arrivals.sample(&mut rng);
        state.apply(1.0, rng.gen_bool(0.5));
    }
    t
}
