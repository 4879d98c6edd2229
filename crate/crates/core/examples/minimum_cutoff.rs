// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Smallest memory cutoff whose expected connection time is within 1% of
//! the unlimited-memory optimum, exactly for short chains and by paired
//! simulation for longer ones.

use repnet::montecarlo::ReplicaPlan;
use repnet::thresholds::{find_min_cutoff, CutoffEstimator};

fn main() -> repnet::Result<()> {
    for (p, m) in [(0.3, 2u32), (0.5, 3), (0.7, 4)] {
        let s = find_min_cutoff(p, m, 0.01, CutoffEstimator::Oracle)?;
        println!("exact      p = {p}, M = {m:>2}: n*_min = {:>3} ({} probes)", s.n_star_min, s.probes.len());
    }
    let plan = ReplicaPlan::new(100_000, 2026);
    for (p, m) in [(0.5, 10u32), (0.3, 10)] {
        let estimator = CutoffEstimator::MonteCarlo { plan, max_replicas: 800_000 };
        let s = find_min_cutoff(p, m, 0.01, estimator)?;
        println!("simulated  p = {p}, M = {m:>2}: n*_min = {:>3} ({})", s.n_star_min, s.confidence_statement());
    }
    Ok(())
}
