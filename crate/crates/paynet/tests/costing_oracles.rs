//! Closed-form economics checked against numeric oracles.
//!
//! Lifetimes are re-derived by solving the absorbing random-walk system
//! directly, optimal allocations are stress-tested against random feasible
//! ones, and liquidity optima are re-found by ternary search. None of the
//! oracles share code paths with the closed forms they check.

use paynet::net::LiquidityAllocation;
use paynet::net::{CostParams, Edge};
use paynet::routing::EdgeRates;
use paynet::{
    channel_lifetime, channel_min_cost, maintenance_cost, network_rps, optimal_allocation,
    optimal_total_liquidity, unit_rps,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Expected time to absorption at 0 or `omega` for a unit random walk
/// started at `omega / 2`, with steps arriving at rate `2 * rate`.
///
/// Solves the linear system E[k] = 1/(2 rate) + (E[k-1] + E[k+1]) / 2 with
/// absorbing boundaries by the tridiagonal (Thomas) algorithm.
fn absorption_time_oracle(omega: usize, rate: f64) -> f64 {
    assert!(omega >= 2 && omega.is_multiple_of(2));
    let m = omega - 1;
    // Rows k = 1..omega-1: -0.5 E[k-1] + E[k] - 0.5 E[k+1] = 1 / (2 rate).
    let mut diag = vec![1.0f64; m];
    let mut rhs = vec![1.0 / (2.0 * rate); m];
    let off = -0.5f64;
    // Forward elimination.
    for k in 1..m {
        let factor = off / diag[k - 1];
        diag[k] -= factor * off;
        rhs[k] -= factor * rhs[k - 1];
    }
    // Back substitution.
    let mut solution = vec![0.0f64; m];
    solution[m - 1] = rhs[m - 1] / diag[m - 1];
    for k in (0..m - 1).rev() {
        solution[k] = (rhs[k] - off * solution[k + 1]) / diag[k];
    }
    solution[omega / 2 - 1]
}

#[test]
fn lifetimes_match_the_absorbing_walk_system() {
    for omega in [2usize, 4, 6, 8, 10, 16, 32] {
        for rate in [0.5, 1.0, 2.0, 4.0] {
            let expected = absorption_time_oracle(omega, rate);
            let closed = channel_lifetime(omega as f64, rate);
            assert!(
                (closed - expected).abs() <= 1e-9 * expected,
                "omega={omega} rate={rate}: closed {closed} vs solver {expected}",
            );
        }
    }
}

fn random_rates(edges: usize, rng: &mut ChaCha8Rng) -> EdgeRates {
    let mut rates = EdgeRates::new();
    for k in 0..edges {
        rates.insert(Edge::new(k, k + 1), rng.gen_range(0.05..10.0));
    }
    rates
}

/// A random allocation of `total` across the rated channels, all positive.
fn random_feasible_allocation(
    rates: &EdgeRates,
    total: f64,
    rng: &mut ChaCha8Rng,
) -> LiquidityAllocation {
    let weights: Vec<(Edge, f64)> = rates
        .iter()
        .map(|(e, _)| (e, -rng.gen_range(1e-12f64..1.0).ln()))
        .collect();
    let sum: f64 = weights.iter().map(|&(_, w)| w).sum();
    LiquidityAllocation::from_entries(weights.into_iter().map(|(e, w)| (e, total * w / sum)))
        .unwrap()
}

#[test]
fn no_random_allocation_beats_the_cube_root_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let edges = rng.gen_range(1..=8);
        let rates = random_rates(edges, &mut rng);
        let total = rng.gen_range(1.0..50.0);
        let best = optimal_allocation(&rates, total).unwrap();
        let best_rps = network_rps(&rates, &best).unwrap();
        let closed = unit_rps(&rates) / (total * total);
        assert!(
            (best_rps - closed).abs() <= 1e-9 * closed,
            "closed-form mismatch: {best_rps} vs {closed}",
        );
        for _ in 0..500 {
            let candidate = random_feasible_allocation(&rates, total, &mut rng);
            let rps = network_rps(&rates, &candidate).unwrap();
            assert!(
                best_rps <= rps + 1e-9 * rps,
                "random allocation won: {rps} < {best_rps}",
            );
        }
    }
}

/// Minimizes a convex function by ternary search in log space.
fn ternary_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let mut lo_log = lo.ln();
    let mut hi_log = hi.ln();
    for _ in 0..300 {
        let a = lo_log + (hi_log - lo_log) / 3.0;
        let b = hi_log - (hi_log - lo_log) / 3.0;
        if f(a.exp()) < f(b.exp()) {
            hi_log = b;
        } else {
            lo_log = a;
        }
    }
    lo = lo_log.exp();
    hi = hi_log.exp();
    let x = (lo + hi) / 2.0;
    (x, f(x))
}

#[test]
fn liquidity_optimum_matches_ternary_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    for _ in 0..25 {
        let edges = rng.gen_range(1..=8);
        let rates = random_rates(edges, &mut rng);
        let params = CostParams::new(rng.gen_range(0.01..5.0), rng.gen_range(0.01..5.0)).unwrap();
        let (w_closed, cost_closed) = optimal_total_liquidity(&rates, &params).unwrap();
        let objective = |w: f64| maintenance_cost(&rates, w, &params).unwrap().total;
        let (w_searched, cost_searched) = ternary_min(objective, w_closed * 1e-3, w_closed * 1e3);
        assert!(
            (w_searched - w_closed).abs() <= 1e-6 * w_closed,
            "W: searched {w_searched} vs closed {w_closed}",
        );
        assert!((cost_searched - cost_closed.total).abs() <= 1e-9 * cost_closed.total);
    }
}

#[test]
fn optimal_cost_scales_with_cube_root_exponents() {
    let mut rng = ChaCha8Rng::seed_from_u64(127);
    let factor = 2.0f64;
    for _ in 0..25 {
        let rates = random_rates(rng.gen_range(1..=6), &mut rng);
        let alpha = rng.gen_range(0.05..3.0);
        let phi = rng.gen_range(0.05..3.0);
        let base = optimal_total_liquidity(&rates, &CostParams::new(alpha, phi).unwrap())
            .unwrap()
            .1
            .total;
        // Scaling every rate scales the unit throughput by the same
        // factor; the optimal cost moves with its cube root.
        let mut scaled_rates = EdgeRates::new();
        for (e, x) in rates.iter() {
            scaled_rates.insert(e, factor * x);
        }
        let cost_scaled_rates =
            optimal_total_liquidity(&scaled_rates, &CostParams::new(alpha, phi).unwrap())
                .unwrap()
                .1
                .total;
        let throughput_exponent = (cost_scaled_rates / base).ln() / factor.ln();
        assert!(
            (throughput_exponent - 1.0 / 3.0).abs() <= 1e-9,
            "throughput exponent {throughput_exponent}",
        );
        let cost_scaled_fee =
            optimal_total_liquidity(&rates, &CostParams::new(alpha, factor * phi).unwrap())
                .unwrap()
                .1
                .total;
        let fee_exponent = (cost_scaled_fee / base).ln() / factor.ln();
        assert!(
            (fee_exponent - 1.0 / 3.0).abs() <= 1e-9,
            "fee exponent {fee_exponent}"
        );
        let cost_scaled_interest =
            optimal_total_liquidity(&rates, &CostParams::new(factor * alpha, phi).unwrap())
                .unwrap()
                .1
                .total;
        let interest_exponent = (cost_scaled_interest / base).ln() / factor.ln();
        assert!(
            (interest_exponent - 2.0 / 3.0).abs() <= 1e-9,
            "interest exponent {interest_exponent}",
        );
    }
}

#[test]
fn single_channel_floor_matches_direct_minimization() {
    let mut rng = ChaCha8Rng::seed_from_u64(255);
    for _ in 0..25 {
        let rate = rng.gen_range(0.05..10.0);
        let alpha = rng.gen_range(0.05..5.0);
        let phi = rng.gen_range(0.05..5.0);
        let params = CostParams::new(alpha, phi).unwrap();
        let closed = channel_min_cost(rate, &params);
        let per_channel = |w: f64| phi * 8.0 * rate / (w * w) + alpha * w;
        let guess = (2.0 * phi * 8.0 * rate / alpha).cbrt();
        let (_, searched) = ternary_min(per_channel, guess * 1e-3, guess * 1e3);
        assert!(
            (searched - closed).abs() <= 1e-9 * closed,
            "channel floor: searched {searched} vs closed {closed}",
        );
    }
}

#[test]
fn rate_scaling_of_the_rps_exponent_is_exact() {
    // The unit throughput itself scales linearly in a uniform rate scale,
    // cubically in the cube-root sum.
    let mut rates = EdgeRates::new();
    rates.insert(Edge::new(0, 1), 1.0);
    rates.insert(Edge::new(1, 2), 8.0);
    let base = unit_rps(&rates);
    let mut scaled = EdgeRates::new();
    scaled.insert(Edge::new(0, 1), 8.0);
    scaled.insert(Edge::new(1, 2), 64.0);
    assert!((unit_rps(&scaled) - 8.0 * base).abs() <= 1e-9 * base);
}
