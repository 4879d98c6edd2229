// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Trials until the apex of a pyramid network connects to a node on its
//! bottom row.

use repnet::montecarlo::{self, ReplicaPlan};
use repnet::topology::Pyramid;
use repnet::{LinkModel, MemoryPolicy};

fn main() -> repnet::Result<()> {
    let (p, cutoff) = (0.1, MemoryPolicy::Finite(2));
    let plan = ReplicaPlan::new(20_000, 4);
    for layers in [3usize, 5, 7] {
        let pyramid = Pyramid::new(layers)?;
        let topo = pyramid.topology();
        let links = LinkModel::homogeneous(topo.edge_count(), p)?;
        let row: Vec<String> = (1..=layers)
            .map(|x| {
                let a = pyramid.bottom(x)?;
                let e = montecarlo::estimate(
                    |rng| montecarlo::sample_pair_connection_trials(&topo, a, pyramid.apex(), &links, cutoff, rng).map(|n| n as f64),
                    &plan,
                )?;
                Ok(format!("{:.1}", e.mean))
            })
            .collect::<repnet::Result<_>>()?;
        println!("{layers} layers, bottom positions 1..={layers}: {}", row.join("  "));
    }
    Ok(())
}
