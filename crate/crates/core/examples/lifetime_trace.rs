// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Per-trial link states: a link established in trial j stays live through
//! trial j + n* and is attempted again in trial j + n* + 1.

use rand::SeedableRng;
use repnet::montecarlo::TrialTrace;
use repnet::{LinkModel, MemoryPolicy};

fn main() -> repnet::Result<()> {
    let links = LinkModel::homogeneous(3, 0.6)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let trace = TrialTrace::record(&links, MemoryPolicy::Finite(2), 12, &mut rng);
    for t in 1..=trace.trials() {
        let live = trace.live_edges(t);
        let row: String = (0..3).map(|e| if live.contains(&e) { '#' } else { '.' }).collect();
        println!("trial {t:>2}: {row}");
    }
    for link in 0..3 {
        println!("link {link} lifetimes: {:?}", trace.lifetimes(link));
    }
    trace.audit().map_err(repnet::Error::Fit)?;
    println!("every completed lifetime is n* + 1 = 3 trials");
    Ok(())
}
