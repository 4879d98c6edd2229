// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Critical link probability of a lattice after ten trials, from a logistic
//! fit to simulated sweeps and from the single-link availability.
//!
//!     cargo run --release --example percolation_threshold -- triangular 2 200

use repnet::montecarlo::ReplicaPlan;
use repnet::oracle::LatticeKind;
use repnet::thresholds::{estimate_p_crit, PCritConfig, PCritMethod};
use repnet::MemoryPolicy;

fn main() -> repnet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lattice: LatticeKind = args.first().map_or("square", String::as_str).parse()?;
    let n_star: u64 = args.get(1).map_or(Ok(1), |s| s.parse()).expect("cutoff must be an integer");
    let size: usize = args.get(2).map_or(Ok(200), |s| s.parse()).expect("size must be an integer");

    let plan = ReplicaPlan::new(8, 2026);
    let config = PCritConfig::new(lattice, size, MemoryPolicy::Finite(n_star), plan);
    let fit = estimate_p_crit(&config, PCritMethod::LogisticFit)?;
    let semi = estimate_p_crit(&config, PCritMethod::SemiAnalytic)?;

    println!("{} lattice {size}x{size}, n* = {n_star}, n = {}", lattice.name(), config.n);
    println!("logistic fit   p_crit = {:.4} +- {:.4}", fit.p_crit, fit.std_error);
    if let Some(p) = fit.steepest_slope_p {
        println!("steepest slope p      = {p:.4}");
    }
    println!("semi-analytic  p_crit = {:.4}", semi.p_crit);
    println!("\n{:>8} {:>14} {:>14}", "p", "largest/M", "largest/live");
    for pt in fit.sweep.iter().filter(|pt| (pt.p - fit.p_crit).abs() < 0.03) {
        println!("{:>8.4} {:>14.4} {:>14.4}", pt.p, pt.mean_fraction, pt.cluster_share);
    }
    Ok(())
}
