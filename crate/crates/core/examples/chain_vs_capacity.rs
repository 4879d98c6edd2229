// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Where a repeater chain with unlimited memory starts to beat the
//! repeaterless capacity of the whole fibre.

use repnet::thresholds::{find_min_chain_length_default, rate_minus_capacity};
use repnet::model::DEFAULT_ATTENUATION_PER_KM;

fn main() -> repnet::Result<()> {
    println!("{:>3} {:>12} {:>8}", "M", "crossing km", "L_min");
    for m in [2u32, 3, 4, 5, 10] {
        let t = find_min_chain_length_default(m)?;
        println!("{m:>3} {:>12.3} {:>8}", t.crossing_km, t.l_min_km);
    }
    println!("\nrate - capacity for M = 4:");
    for l in [40.0, 47.0, 48.0, 60.0, 100.0] {
        println!("  L = {l:>5} km: {:+.3e}", rate_minus_capacity(4, l, DEFAULT_ATTENUATION_PER_KM)?);
    }
    Ok(())
}
