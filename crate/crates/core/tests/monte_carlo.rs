// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

use rand::SeedableRng;
use repnet::analytic::{self, InfiniteMemoryMethod};
use repnet::montecarlo::{self, CoinMode, LinkSet, ReplicaPlan, TrialTrace};
use repnet::oracle;
use repnet::{topology, LinkModel, MemoryPolicy};

fn chain_trials(p: f64, m: usize, policy: MemoryPolicy, mode: CoinMode, replicas: u64, seed: u64) -> repnet::EstimatorResult {
    let chain = topology::chain(m).unwrap();
    let links = LinkModel::homogeneous(m, p).unwrap();
    let edges = chain.all_edge_indices();
    montecarlo::estimate(
        |rng| montecarlo::sample_connection_trials_with(&chain, &edges, &links, policy, mode, montecarlo::TRIAL_CAP, rng).map(|n| n as f64),
        &ReplicaPlan::new(replicas, seed),
    )
    .unwrap()
}

#[test]
fn zero_cutoff_matches_geometric_mean() {
    for (p, m) in [(0.5, 2usize), (0.7, 3)] {
        let exact = 1.0 / f64::powi(p, m as i32);
        let r = chain_trials(p, m, MemoryPolicy::Finite(0), CoinMode::Lazy, 100_000, 1);
        assert!(r.agrees_with(exact, 4.0), "{r:?} vs {exact}");
    }
}

#[test]
fn infinite_cutoff_matches_series_in_both_coin_modes() {
    for mode in [CoinMode::Lazy, CoinMode::Paired] {
        let exact = analytic::expected_trials_infinite_memory(0.3, 4, InfiniteMemoryMethod::SurvivalSeries).unwrap();
        let r = chain_trials(0.3, 4, MemoryPolicy::Infinite, mode, 100_000, 2);
        assert!(r.agrees_with(exact, 4.0), "{mode:?}: {r:?} vs {exact}");
    }
}

#[test]
fn pmf_matches_histogram() {
    let (p, m) = (0.4, 3u32);
    let replicas = 200_000u64;
    let chain = topology::chain(m as usize).unwrap();
    let links = LinkModel::homogeneous(m as usize, p).unwrap();
    let counts = montecarlo::collect_replicas(
        |rng| montecarlo::sample_connection_trials(&chain, &chain.all_edge_indices(), &links, MemoryPolicy::Infinite, rng),
        &ReplicaPlan::new(replicas, 5),
    )
    .unwrap();
    for n in 1..=8u64 {
        let expected = analytic::pmf_trials_infinite_memory(p, m, n).unwrap();
        let observed = counts.iter().filter(|&&c| c == n).count() as f64 / replicas as f64;
        let se = (expected * (1.0 - expected) / replicas as f64).sqrt();
        assert!((observed - expected).abs() <= 4.0 * se, "n={n}: {observed} vs {expected}");
    }
}

#[test]
fn common_random_numbers_need_not_be_monotone_per_replica() {
    // Link 0 succeeds only in trial 4; link 1 in trials 1 and 3.
    let coins = [[false, true], [false, false], [false, true], [true, false]];
    let run = |n_star| {
        let mut set = LinkSet::new(vec![0.5, 0.5], MemoryPolicy::Finite(n_star));
        let mut first = None;
        for (t, row) in coins.iter().enumerate() {
            let u: Vec<f64> = row.iter().map(|&s| if s { 0.1 } else { 0.9 }).collect();
            set.step_with_uniforms(&u);
            if set.all_live() && first.is_none() {
                first = Some(t + 1);
            }
        }
        first
    };
    assert_eq!(run(1), Some(4));
    assert_eq!(run(2), None);
}

#[test]
fn mean_connection_time_decreases_with_cutoff() {
    let probs = vec![0.4; 5];
    let policies: Vec<MemoryPolicy> = (0..=6).map(MemoryPolicy::Finite).chain([MemoryPolicy::Infinite]).collect();
    let draws = montecarlo::collect_replicas(
        |rng| montecarlo::sample_connection_trials_paired(&probs, &policies, rng),
        &ReplicaPlan::new(50_000, 8),
    )
    .unwrap();
    let means: Vec<f64> = (0..policies.len())
        .map(|i| draws.iter().map(|d| d[i] as f64).sum::<f64>() / draws.len() as f64)
        .collect();
    assert!(means.windows(2).all(|w| w[1] <= w[0]), "{means:?}");
    for (i, policy) in policies.iter().enumerate().take(3) {
        let exact = oracle::exact_expected_trials(0.4, 5, *policy).unwrap();
        let var = draws.iter().map(|d| (d[i] as f64 - means[i]).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((means[i] - exact).abs() <= 4.0 * (var / draws.len() as f64).sqrt());
    }
}

#[test]
fn link_count_beyond_exact_regime_matches_availability() {
    let links = LinkModel::homogeneous(40, 0.35).unwrap();
    for (n_star, n) in [(1u64, 7u64), (3, 12), (5, 30)] {
        let policy = MemoryPolicy::Finite(n_star);
        let r = montecarlo::estimate(|rng| montecarlo::sample_link_count(&links, policy, n, rng).map(|l| l as f64 / 40.0), &ReplicaPlan::new(40_000, n))
            .unwrap();
        let exact = oracle::link_availability(0.35, policy, n).unwrap();
        assert!(r.agrees_with(exact, 4.0), "n*={n_star} n={n}: {r:?} vs {exact}");
    }
}

#[test]
fn largest_cluster_obeys_live_link_bound() {
    let grid = topology::triangular_lattice(20, 20).unwrap();
    let links = LinkModel::homogeneous(grid.edge_count(), 0.3).unwrap();
    let samples = montecarlo::collect_replicas(
        |rng| montecarlo::sample_largest_cluster(&grid, &links, MemoryPolicy::Finite(2), 10, rng),
        &ReplicaPlan::new(500, 3),
    )
    .unwrap();
    assert!(samples.iter().all(|c| c.largest <= c.live));
    let m = grid.edge_count() as f64;
    let mean = samples.iter().map(|c| c.largest as f64 / m).sum::<f64>() / samples.len() as f64;
    assert!(mean <= 1.0 - 0.7f64.powi(10));
}

#[test]
fn recorded_traces_pass_lifetime_audit() {
    let links = LinkModel::homogeneous(6, 0.45).unwrap();
    for n_star in [0u64, 1, 3, 7] {
        let mut rng = montecarlo::replica_rng(17, n_star);
        let trace = TrialTrace::record(&links, MemoryPolicy::Finite(n_star), 200, &mut rng);
        trace.audit().unwrap();
        for link in 0..6 {
            assert!(trace.lifetimes(link).iter().all(|&(len, open)| open || len == n_star + 1));
        }
    }
}

#[test]
fn replica_streams_are_distinct() {
    use rand::Rng;
    let mut a = montecarlo::replica_rng(1, 0);
    let mut b = montecarlo::replica_rng(1, 1);
    let mut c = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<u64> = (0..4).map(|_| a.random()).collect();
    let ys: Vec<u64> = (0..4).map(|_| b.random()).collect();
    let zs: Vec<u64> = (0..4).map(|_| c.random()).collect();
    assert_ne!(xs, ys);
    assert_eq!(xs, zs);
}
