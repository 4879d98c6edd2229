// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Replica streams depend only on the seed and replica index, so the worker
//! count never changes a result. Per-replica values can be exported for replay.

use repnet::montecarlo::{self, ReplicaPlan};
use repnet::{topology, LinkModel, MemoryPolicy};

fn main() -> repnet::Result<()> {
    let grid = topology::square_lattice(30, 30)?;
    let links = LinkModel::homogeneous(grid.edge_count(), 0.4)?;
    let sampler = |rng: &mut montecarlo::ReplicaRng| {
        montecarlo::sample_largest_cluster(&grid, &links, MemoryPolicy::Finite(1), 10, rng).map(|c| c.largest as f64)
    };
    for workers in [1, 2, 4] {
        let plan = ReplicaPlan::new(5_000, 42).with_workers(workers);
        let e = montecarlo::estimate(sampler, &plan)?;
        println!("{workers} workers: mean largest cluster {:.6} (bits {:016x})", e.mean, e.mean.to_bits());
    }
    let (_, samples) = montecarlo::estimate_with_samples(sampler, &ReplicaPlan::new(5, 42))?;
    montecarlo::write_samples_csv(std::io::stdout(), &samples)?;
    Ok(())
}
