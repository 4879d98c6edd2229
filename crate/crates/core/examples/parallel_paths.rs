// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Two edge-disjoint two-link paths between the same endpoints: the first
//! path to become fully live connects them.

use repnet::analytic::{expected_trials_parallel_infinite, expected_trials_parallel_no_memory, pmf_trials_parallel_infinite};
use repnet::montecarlo::{self, ReplicaPlan};
use repnet::{LinkModel, MemoryPolicy, Topology};

fn main() -> repnet::Result<()> {
    // 0 - 1 - 3 and 0 - 2 - 3.
    let diamond = Topology::new(4, vec![(0, 1), (1, 3), (0, 2), (2, 3)])?;
    for p in [0.3, 0.5] {
        let links = LinkModel::homogeneous(4, p)?;
        let sim = montecarlo::estimate(
            |rng| montecarlo::sample_pair_connection_trials(&diamond, 0, 3, &links, MemoryPolicy::Infinite, rng).map(|n| n as f64),
            &ReplicaPlan::new(200_000, 11),
        )?;
        let mass: f64 = (1..=200).map(|n| pmf_trials_parallel_infinite(p, 2, 2, n)).sum::<repnet::Result<f64>>()?;
        println!(
            "p = {p}: formula {:.5}, simulated {:.5} +- {:.5}, no memory {:.5}, pmf mass to 200 = {mass:.12}",
            expected_trials_parallel_infinite(p, 2, 2)?,
            sim.mean,
            sim.std_error,
            expected_trials_parallel_no_memory(p, 2, 2)?.value()
        );
    }
    Ok(())
}
