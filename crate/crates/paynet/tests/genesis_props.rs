//! Demand-generator properties: structural validity, connectivity, rate
//! floors, determinism, and a tail-exponent fit on the degree sequence.

use paynet::genesis::{self, GenesisConfig};
use paynet::net::Topology;

fn degrees_of(demand: &paynet::net::DemandMatrix) -> Vec<usize> {
    let n = demand.n();
    let mut degrees = vec![0usize; n];
    for (i, j, _) in demand.pairs() {
        degrees[i] += 1;
        degrees[j] += 1;
    }
    degrees
}

fn demand_topology(demand: &paynet::net::DemandMatrix) -> Topology {
    let mut t = Topology::empty(demand.n());
    for (i, j, _) in demand.pairs() {
        t.insert_edge(i, j).unwrap();
    }
    t
}

/// Discrete maximum-likelihood tail exponent with x_min = 2, using the
/// continuous correction d/(x_min - 1/2). Standard estimator, nothing from
/// the generator's own machinery.
fn fitted_exponent(degrees: &[usize]) -> f64 {
    let tail: Vec<f64> = degrees
        .iter()
        .filter(|&&d| d >= 2)
        .map(|&d| (d as f64 / 1.5).ln())
        .collect();
    assert!(tail.len() > 100, "tail too small to fit");
    1.0 + tail.len() as f64 / tail.iter().sum::<f64>()
}

#[test]
fn output_is_valid_connected_and_floored() {
    for exponent in [2.0, 2.25, 2.5, 2.75, 3.0] {
        let config = GenesisConfig {
            n: 300,
            degree_exponent: exponent,
            rate_exponent: 2.5,
            rate_min: 0.2,
            seed: 8,
        };
        let demand = genesis::generate(&config).unwrap();
        demand.validate().unwrap();
        let topology = demand_topology(&demand);
        assert_eq!(topology.components().len(), 1, "exponent {exponent}");
        for (_, _, rate) in demand.pairs() {
            assert!(rate >= 0.2, "rate {rate} under the floor");
        }
        for d in degrees_of(&demand) {
            assert!((1..=299).contains(&d));
        }
    }
}

#[test]
fn tiny_populations_still_work() {
    for n in [2, 3, 5] {
        let config = GenesisConfig {
            n,
            degree_exponent: 2.5,
            rate_exponent: 2.0,
            rate_min: 1.0,
            seed: 3,
        };
        let demand = genesis::generate(&config).unwrap();
        demand.validate().unwrap();
        assert_eq!(demand_topology(&demand).components().len(), 1);
    }
}

#[test]
fn same_seed_same_demand_different_seed_different_demand() {
    let config = GenesisConfig {
        n: 2000,
        degree_exponent: 2.5,
        rate_exponent: 2.5,
        rate_min: 0.5,
        seed: 77,
    };
    let a = genesis::generate(&config).unwrap();
    let b = genesis::generate(&config).unwrap();
    assert_eq!(a.pairs(), b.pairs());
    let c = genesis::generate(&GenesisConfig { seed: 78, ..config }).unwrap();
    assert_ne!(a.pairs(), c.pairs());
}

#[test]
fn degree_tail_matches_the_requested_exponent() {
    for seed in [1, 2, 3] {
        let config = GenesisConfig {
            n: 2000,
            degree_exponent: 2.5,
            rate_exponent: 2.5,
            rate_min: 0.5,
            seed,
        };
        let demand = genesis::generate(&config).unwrap();
        let fitted = fitted_exponent(&degrees_of(&demand));
        assert!(
            (fitted - 2.5).abs() <= 0.3,
            "seed {seed}: fitted exponent {fitted} too far from 2.5",
        );
    }
}

#[test]
fn bad_configs_are_rejected() {
    let base = GenesisConfig {
        n: 10,
        degree_exponent: 2.5,
        rate_exponent: 2.5,
        rate_min: 0.5,
        seed: 0,
    };
    assert!(genesis::generate(&GenesisConfig { n: 1, ..base }).is_err());
    assert!(genesis::generate(&GenesisConfig {
        degree_exponent: 0.9,
        ..base
    })
    .is_err());
    assert!(genesis::generate(&GenesisConfig {
        rate_exponent: 1.0,
        ..base
    })
    .is_err());
    assert!(genesis::generate(&GenesisConfig {
        rate_min: 0.0,
        ..base
    })
    .is_err());
    assert!(genesis::generate(&GenesisConfig {
        rate_min: -1.0,
        ..base
    })
    .is_err());
}
