// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Average connection times and largest entanglement clusters for quantum
//! networks whose elementary links are generated probabilistically, one
//! synchronized trial at a time, and held in memories with a finite cutoff.
//!
//! - [`model`]: topologies, link probabilities, cutoffs and trial rates.
//! - [`analytic`]: closed forms for the no-memory and infinite-memory limits.
//! - [`oracle`]: exact Markov-chain answers for small systems and the
//!   per-link availability `q_n`.
//! - [`montecarlo`]: seeded, replica-parallel simulation of the protocol.
//! - [`topology`]: chains, lattices, pyramids, edge-list files, union-find.
//! - [`thresholds`]: minimum cutoffs, minimum chain lengths, critical
//!   link probabilities.
//! - [`cli`]: the `repnet` command-line front end.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod thresholds;
pub mod topology;

pub use error::{Error, Result};
pub use model::{EstimatorResult, LinkAgeState, LinkModel, MemoryPolicy, RateModel, Topology};
