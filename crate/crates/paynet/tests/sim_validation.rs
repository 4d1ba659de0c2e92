//! Simulator validation against closed forms: single-channel lifetimes and
//! throughput, additivity across channels, the equal-split advantage, a
//! whole-network throughput check, and determinism.

use paynet::net::{ChannelState, DemandMatrix, Edge, LiquidityAllocation, Network, Topology};
use paynet::routing::tree_routing;
use paynet::sim::{estimate_rps, first_depletion_time, simulate, Horizon, SimConfig};

fn single_channel_config(omega: f64, rate: f64, horizon: Horizon, seed: u64) -> SimConfig {
    let topology = Topology::path(2);
    let liquidity = LiquidityAllocation::from_entries([(Edge::new(0, 1), omega)]).unwrap();
    let network = Network::new(topology.clone(), liquidity).unwrap();
    let mut demand = DemandMatrix::zeros(2);
    demand.set_rate(0, 1, rate);
    let policy = tree_routing(&topology, &demand).unwrap();
    SimConfig {
        network,
        policy,
        demand,
        horizon,
        seed,
    }
}

#[test]
fn lifetimes_follow_the_quadratic_law() {
    let mut seed = 41;
    for omega in [4.0, 8.0] {
        for rate in [0.5, 1.0] {
            seed += 1;
            let config = single_channel_config(omega, rate, Horizon::Resets(30_000), seed);
            let result = simulate(&config).unwrap();
            let measured = result.mean_lifetime(Edge::new(0, 1)).unwrap();
            let expected = omega * omega / (8.0 * rate);
            let err = (measured - expected).abs() / expected;
            assert!(
                err <= 0.03,
                "omega={omega} rate={rate}: lifetime {measured} vs {expected} ({:.2}% off)",
                err * 100.0,
            );
        }
    }
}

#[test]
fn reset_throughput_matches_the_inverse_square() {
    for (omega, expected) in [(2.0, 2.0), (4.0, 0.5)] {
        let config = single_channel_config(omega, 1.0, Horizon::Resets(100_000), 7);
        let result = simulate(&config).unwrap();
        let estimate = estimate_rps(&result);
        let err = (estimate.total_rps - expected).abs() / expected;
        assert!(
            err <= 0.02,
            "omega={omega}: throughput {} vs {expected}",
            estimate.total_rps,
        );
        assert_eq!(estimate.batches, 20);
        assert!(estimate.half_width.is_finite());
    }
}

#[test]
fn throughput_adds_across_independent_channels() {
    // Two channels on a path; demand only between adjacent agents, so each
    // pair stresses its own channel and the pieces must sum to the whole.
    let topology = Topology::path(3);
    let liquidity =
        LiquidityAllocation::from_entries([(Edge::new(0, 1), 4.0), (Edge::new(1, 2), 6.0)])
            .unwrap();
    let network = Network::new(topology.clone(), liquidity).unwrap();
    let mut demand = DemandMatrix::zeros(3);
    demand.set_rate(0, 1, 1.0);
    demand.set_rate(1, 2, 2.0);
    let policy = tree_routing(&topology, &demand).unwrap();
    let joint = simulate(&SimConfig {
        network,
        policy,
        demand,
        horizon: Horizon::Time(40_000.0),
        seed: 11,
    })
    .unwrap();
    let joint_est = estimate_rps(&joint);

    let mut parts = 0.0;
    let mut part_var = 0.0;
    for (omega, rate, seed) in [(4.0, 1.0, 12), (6.0, 2.0, 13)] {
        let single = single_channel_config(omega, rate, Horizon::Time(40_000.0), seed);
        let est = estimate_rps(&simulate(&single).unwrap());
        parts += est.total_rps;
        part_var += (est.half_width / 1.96).powi(2);
    }
    let sigma = (part_var + (joint_est.half_width / 1.96).powi(2)).sqrt();
    assert!(
        (joint_est.total_rps - parts).abs() <= 3.0 * sigma,
        "joint {} vs summed singles {parts} (sigma {sigma})",
        joint_est.total_rps,
    );
}

#[test]
fn equal_split_survives_longest() {
    // First depletion from (a, b) should average a*b/(2*rate): the balanced
    // start beats any skewed start with the same total.
    let trials: u64 = 10_000;
    let mut mean_skewed = 0.0;
    let mut mean_even = 0.0;
    let mut sq_skewed = 0.0;
    let mut sq_even = 0.0;
    for trial in 0..trials {
        let skewed = first_depletion_time(ChannelState::new(2.0, 6.0).unwrap(), 1.0, trial);
        let even =
            first_depletion_time(ChannelState::new(4.0, 4.0).unwrap(), 1.0, trial + 1_000_000);
        mean_skewed += skewed;
        mean_even += even;
        sq_skewed += skewed * skewed;
        sq_even += even * even;
    }
    let n = trials as f64;
    mean_skewed /= n;
    mean_even /= n;
    let se_skewed = ((sq_skewed / n - mean_skewed * mean_skewed) / n).sqrt();
    let se_even = ((sq_even / n - mean_even * mean_even) / n).sqrt();
    assert!((mean_skewed - 6.0).abs() <= 3.0 * se_skewed + 1e-9);
    assert!((mean_even - 8.0).abs() <= 3.0 * se_even + 1e-9);
    let gap_se = (se_skewed * se_skewed + se_even * se_even).sqrt();
    assert!(
        mean_even - mean_skewed > 3.0 * gap_se,
        "even split {mean_even} not clearly above skewed {mean_skewed}",
    );
}

#[test]
fn network_throughput_matches_the_cube_root_formula() {
    // Rates (1, 8, 1) on a three-channel path, liquidity 24 split as the
    // cube-root rule dictates: (6, 12, 6). Closed form: 8 * 4^3 / 24^2.
    let topology = Topology::path(4);
    let liquidity = LiquidityAllocation::from_entries([
        (Edge::new(0, 1), 6.0),
        (Edge::new(1, 2), 12.0),
        (Edge::new(2, 3), 6.0),
    ])
    .unwrap();
    let network = Network::new(topology.clone(), liquidity).unwrap();
    let mut demand = DemandMatrix::zeros(4);
    demand.set_rate(0, 1, 1.0);
    demand.set_rate(1, 2, 8.0);
    demand.set_rate(2, 3, 1.0);
    let policy = tree_routing(&topology, &demand).unwrap();
    let result = simulate(&SimConfig {
        network,
        policy,
        demand,
        horizon: Horizon::Resets(15_000),
        seed: 23,
    })
    .unwrap();
    let estimate = estimate_rps(&result);
    let expected = 8.0 * 64.0 / (24.0 * 24.0);
    let err = (estimate.total_rps - expected).abs() / expected;
    assert!(
        err <= 0.03,
        "network throughput {} vs {expected}",
        estimate.total_rps,
    );
    assert!(estimate.unmeasured.is_empty());
}

#[test]
fn identical_seeds_reproduce_identical_runs() {
    let build = || {
        let topology = Topology::path(4);
        let liquidity = LiquidityAllocation::from_entries([
            (Edge::new(0, 1), 4.0),
            (Edge::new(1, 2), 8.0),
            (Edge::new(2, 3), 4.0),
        ])
        .unwrap();
        let network = Network::new(topology.clone(), liquidity).unwrap();
        let mut demand = DemandMatrix::zeros(4);
        demand.set_rate(0, 3, 1.0);
        demand.set_rate(1, 2, 2.0);
        demand.set_rate(0, 2, 0.5);
        let policy = tree_routing(&topology, &demand).unwrap();
        SimConfig {
            network,
            policy,
            demand,
            horizon: Horizon::Time(2000.0),
            seed: 99,
        }
    };
    let a = simulate(&build()).unwrap();
    let b = simulate(&build()).unwrap();
    assert_eq!(a.transfers(), b.transfers());
    assert_eq!(a.total_resets(), b.total_resets());
    let counts_a: Vec<_> = a.reset_counts().collect();
    let counts_b: Vec<_> = b.reset_counts().collect();
    assert_eq!(counts_a, counts_b);
    assert_eq!(a.reset_times(), b.reset_times());
    let c = simulate(&SimConfig {
        seed: 100,
        ..build()
    })
    .unwrap();
    assert_ne!(
        (a.transfers(), a.total_resets()),
        (c.transfers(), c.total_resets()),
        "different seeds should not collide on this horizon",
    );
}

#[test]
fn idle_channels_are_reported_as_unmeasured() {
    // A channel that no route crosses can never reset; the estimate must
    // list it instead of inventing a rate.
    let topology = Topology::path(3);
    let liquidity =
        LiquidityAllocation::from_entries([(Edge::new(0, 1), 4.0), (Edge::new(1, 2), 4.0)])
            .unwrap();
    let network = Network::new(topology.clone(), liquidity).unwrap();
    let mut demand = DemandMatrix::zeros(3);
    demand.set_rate(0, 1, 1.0);
    let policy = tree_routing(&topology, &demand).unwrap();
    let result = simulate(&SimConfig {
        network,
        policy,
        demand,
        horizon: Horizon::Resets(100),
        seed: 5,
    })
    .unwrap();
    let estimate = estimate_rps(&result);
    assert_eq!(estimate.unmeasured, vec![(1, 2)]);
    assert!(result.mean_lifetime(Edge::new(1, 2)).is_none());
}
