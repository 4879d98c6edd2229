// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Expected trials until every link of a network is live: the no-memory and
//! infinite-memory closed forms bracket the exact finite-cutoff values.

use repnet::analytic::{expected_trials_infinite_memory, expected_trials_no_memory, InfiniteMemoryMethod};
use repnet::montecarlo::{self, ReplicaPlan};
use repnet::oracle::exact_expected_trials;
use repnet::{topology, LinkModel, MemoryPolicy, RateModel};

fn main() -> repnet::Result<()> {
    let (p, m) = (0.5, 3u32);
    let lower = expected_trials_infinite_memory(p, m, InfiniteMemoryMethod::SurvivalSeries)?;
    let upper = expected_trials_no_memory(p, m)?.value();
    println!("M = {m}, p = {p}: {lower:.4} <= E[N] <= {upper:.4}");

    let chain = topology::chain(m as usize)?;
    let links = LinkModel::homogeneous(chain.edge_count(), p)?;
    let every_edge = chain.all_edge_indices();
    println!("{:>4} {:>12} {:>12} {:>10}", "n*", "exact", "simulated", "std err");
    for n_star in [0u64, 1, 2, 4, 8] {
        let policy = MemoryPolicy::Finite(n_star);
        let exact = exact_expected_trials(p, m, policy)?;
        let sim = montecarlo::estimate(
            |rng| montecarlo::sample_connection_trials(&chain, &every_edge, &links, policy, rng).map(|n| n as f64),
            &ReplicaPlan::new(200_000, 1),
        )?;
        println!("{n_star:>4} {exact:>12.5} {:>12.5} {:>10.5}", sim.mean, sim.std_error);
    }

    // In seconds: 100 links of 40 km each, trials paced by the light round trip.
    let length_km = 40.0;
    let p = repnet::model::effective_probability(length_km, repnet::model::DEFAULT_ATTENUATION_PER_KM, 1.0, 1)?;
    let rate = RateModel::from_link_length(length_km)?;
    let none = expected_trials_no_memory(p, 100)?;
    let best = expected_trials_infinite_memory(p, 100, InfiniteMemoryMethod::SurvivalSeries)?;
    println!(
        "\n100 x 40 km: no memory ~1e{:.1} s, unlimited memory {:.4} s",
        none.log10 - rate.trials_per_second().log10(),
        rate.trials_to_seconds(best)
    );
    Ok(())
}
