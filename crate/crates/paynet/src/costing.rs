//! Closed-form lifetime, throughput, and maintenance-cost formulas.
//!
//! Under symmetric Poisson demand a channel's balance performs an unbiased
//! one-coin random walk between its two sides. Starting from the equal
//! split, a channel with liquidity `w` facing rate `lambda` per direction
//! runs for `w^2 / (8 lambda)` seconds on average before a side empties
//! and the channel must reset on the ledger. Everything else in this
//! module is bookkeeping on top of that law: reset throughput, the
//! liquidity split that minimizes it, and the capital-versus-fees tradeoff
//! that fixes the total liquidity worth parking.

use crate::net::{CostParams, DemandMatrix, Edge, LiquidityAllocation, NetError};
use crate::routing::{EdgeRates, RoutingPolicy};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("all channel rates are zero")]
    AllRatesZero,
    #[error("total liquidity must be positive and finite")]
    BadTotalLiquidity,
    #[error("channel ({0}, {1}) carries rate but holds no liquidity")]
    UnfundedChannel(usize, usize),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Expected seconds until a channel with `liquidity` coins, split equally
/// and facing `rate` transfers per second in each direction, first empties
/// a side. A silent channel never resets, so zero rate yields infinity.
pub fn channel_lifetime(liquidity: f64, rate: f64) -> f64 {
    debug_assert!(liquidity >= 0.0 && rate >= 0.0);
    if rate == 0.0 {
        return f64::INFINITY;
    }
    liquidity * liquidity / (8.0 * rate)
}

/// Long-run ledger records per second for the whole network when one coin
/// of total liquidity is spread optimally: `8 * (sum of cbrt(rate))^3`.
/// Scaling total liquidity to `w` divides this by `w^2`.
pub fn unit_rps(rates: &EdgeRates) -> f64 {
    let s = rates.cbrt_sum();
    8.0 * s * s * s
}

/// Splits `total` coins across channels proportionally to the cube root
/// of each channel's rate, which minimizes the summed reset throughput.
/// Channels carrying no rate get nothing.
pub fn optimal_allocation(rates: &EdgeRates, total: f64) -> Result<LiquidityAllocation, CostError> {
    if !(total.is_finite() && total > 0.0) {
        return Err(CostError::BadTotalLiquidity);
    }
    let s = rates.cbrt_sum();
    if s == 0.0 {
        return Err(CostError::AllRatesZero);
    }
    let mut alloc = LiquidityAllocation::new();
    for (e, lambda) in rates.iter() {
        let w = if lambda > 0.0 {
            total * lambda.cbrt() / s
        } else {
            0.0
        };
        alloc.set(e, w).expect("allocation shares are finite");
    }
    Ok(alloc)
}

/// Summed reset throughput `8 * rate / w^2` over the funded channels.
/// A channel with positive rate and no liquidity would reset at an
/// unbounded pace, so it is rejected.
pub fn network_rps(rates: &EdgeRates, alloc: &LiquidityAllocation) -> Result<f64, CostError> {
    let mut total = 0.0;
    for (e, lambda) in rates.iter() {
        if lambda == 0.0 {
            continue;
        }
        let w = alloc.get(e);
        if w <= 0.0 {
            return Err(CostError::UnfundedChannel(e.lo(), e.hi()));
        }
        total += 8.0 * lambda / (w * w);
    }
    Ok(total)
}

/// Price breakdown for running a network at a given total liquidity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkCost {
    /// Ledger records per second under the optimal allocation.
    pub rps: f64,
    /// Interest paid on the parked coins, per second.
    pub liquidity_cost: f64,
    /// Ledger fees paid for resets, per second.
    pub record_cost: f64,
    /// Total price per second.
    pub total: f64,
}

impl NetworkCost {
    pub const CSV_HEADER: &'static str = "rps,liquidity_cost,record_cost,total";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.rps, self.liquidity_cost, self.record_cost, self.total
        )
    }
}

/// Cost of running the network with `total` coins spread optimally:
/// record fees shrink with the square of liquidity while interest grows
/// linearly in it.
pub fn maintenance_cost(
    rates: &EdgeRates,
    total: f64,
    params: &CostParams,
) -> Result<NetworkCost, CostError> {
    if !(total.is_finite() && total > 0.0) {
        return Err(CostError::BadTotalLiquidity);
    }
    let base = unit_rps(rates);
    if base == 0.0 {
        return Err(CostError::AllRatesZero);
    }
    let rps = base / (total * total);
    let liquidity_cost = params.interest_rate() * total;
    let record_cost = params.record_fee() * rps;
    Ok(NetworkCost {
        rps,
        liquidity_cost,
        record_cost,
        total: liquidity_cost + record_cost,
    })
}

/// The total liquidity minimizing maintenance cost, and the cost there.
/// Balancing the two cost terms gives
/// `w = cbrt(2 * fee * unit_rps / interest)`.
pub fn optimal_total_liquidity(
    rates: &EdgeRates,
    params: &CostParams,
) -> Result<(f64, NetworkCost), CostError> {
    let base = unit_rps(rates);
    if base == 0.0 {
        return Err(CostError::AllRatesZero);
    }
    let w = (2.0 * params.record_fee() * base / params.interest_rate()).cbrt();
    let cost = maintenance_cost(rates, w, params)?;
    Ok((w, cost))
}

/// Minimum sustainable price of a single channel carrying `rate`, already
/// optimized over its liquidity: `3 * cbrt(2 * rate * fee) * interest^(2/3)`.
/// A silent channel costs nothing.
pub fn channel_min_cost(rate: f64, params: &CostParams) -> f64 {
    debug_assert!(rate >= 0.0);
    if rate == 0.0 {
        return 0.0;
    }
    let alpha = params.interest_rate();
    let phi = params.record_fee();
    3.0 * (2.0 * rate * phi).cbrt() * alpha.cbrt() * alpha.cbrt()
}

/// Shares of channel rate attributable to agent `v`: for each channel, the
/// demand of pairs with endpoint `v` whose route crosses it.
fn rate_shares(v: usize, policy: &RoutingPolicy, demand: &DemandMatrix) -> BTreeMap<Edge, f64> {
    let mut shares = BTreeMap::new();
    for j in 0..demand.n() {
        if j == v {
            continue;
        }
        let lambda = demand.rate(v, j);
        if lambda <= 0.0 {
            continue;
        }
        let path = policy
            .path(v, j)
            .unwrap_or_else(|| panic!("no route for demand pair ({v}, {j})"));
        for w in path.windows(2) {
            let e = Edge::new(w[0], w[1]);
            *shares.entry(e).or_insert(0.0) += lambda;
        }
    }
    shares
}

/// Price attributed to agent `v`: each channel's minimum cost, weighted by
/// the fraction of the channel's rate that `v`'s own transfers contribute.
/// Both endpoints of a demand pair count their full pair rate, so summing
/// over agents counts every channel's cost twice.
pub fn player_cost(
    v: usize,
    rates: &EdgeRates,
    policy: &RoutingPolicy,
    demand: &DemandMatrix,
    params: &CostParams,
) -> f64 {
    let shares = rate_shares(v, policy, demand);
    let mut weighted = 0.0;
    for (e, share) in shares {
        let lambda = rates.get(e);
        if lambda > 0.0 {
            weighted += (share / lambda) * lambda.cbrt();
        }
    }
    let alpha = params.interest_rate();
    let phi = params.record_fee();
    3.0 * 2f64.cbrt() * phi.cbrt() * alpha.cbrt() * alpha.cbrt() * weighted
}
