// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Networks from edge-list text: fibre lengths become link probabilities.

use repnet::montecarlo::{self, ReplicaPlan};
use repnet::topology::{format_edge_list, parse_edge_list, EdgeListOptions};
use repnet::MemoryPolicy;

const RING: &str = "\
# four nodes on a ring with one chord, lengths in km
nodes 4
0 1 20
1 2 25
2 3 20
3 0 30
0 2 45
";

fn main() -> repnet::Result<()> {
    let options = EdgeListOptions { n_par: 2, ..EdgeListOptions::default() };
    let (topo, links) = parse_edge_list(RING, &options)?;
    print!("{}", format_edge_list(&topo, &links));
    for cutoff in [MemoryPolicy::Finite(0), MemoryPolicy::Finite(5), MemoryPolicy::Infinite] {
        let e = montecarlo::estimate(
            |rng| montecarlo::sample_pair_connection_trials(&topo, 1, 3, &links, cutoff, rng).map(|n| n as f64),
            &ReplicaPlan::new(50_000, 3),
        )?;
        println!("cutoff {cutoff:>3}: nodes 1 and 3 connect after {:.3} +- {:.3} trials", e.mean, e.std_error);
    }
    Ok(())
}
