// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Fraction of live links after n trials. Up to n = n* + 1 it equals
//! 1 - (1-p)^n; later, a longer cutoff can leave fewer links live.

use repnet::analytic::expected_link_fraction_exact;
use repnet::montecarlo::{self, ReplicaPlan};
use repnet::oracle::link_availability;
use repnet::{LinkModel, MemoryPolicy};

fn main() -> repnet::Result<()> {
    let links = LinkModel::homogeneous(40, 0.5)?;
    let plan = ReplicaPlan::new(100_000, 9);
    println!("n = 3, n* = 4: closed form {:.6}", expected_link_fraction_exact(0.5, 3, MemoryPolicy::Finite(4))?);
    println!("\n{:>3} {:>10} {:>10} {:>10}", "n*", "simulated", "std err", "exact");
    for n_star in [2u64, 4, 6, 8, 10] {
        let policy = MemoryPolicy::Finite(n_star);
        let e = montecarlo::estimate(|rng| montecarlo::sample_link_count(&links, policy, 30, rng).map(|l| l as f64 / 40.0), &plan)?;
        println!("{n_star:>3} {:>10.4} {:>10.4} {:>10.4}", e.mean, e.std_error, link_availability(0.5, policy, 30)?);
    }
    Ok(())
}
