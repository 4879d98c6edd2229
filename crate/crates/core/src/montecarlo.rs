// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded trial-level simulation of repeat-until-success link generation.
//!
//! Every replica draws from its own ChaCha stream selected by the replica
//! index, so replica `r` can be replayed in isolation and results do not
//! depend on how replicas are scheduled across workers. Within a trial each
//! link is first reset if it reached the cutoff, then attempts if it is not
//! live, then ages; success conditions are checked at the end of the trial.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EstimatorResult, LinkAgeState, LinkModel, MemoryPolicy, Topology};
use crate::topology::UnionFind;

pub type ReplicaRng = ChaCha8Rng;

/// Hard limit on trials in a single replica.
pub const TRIAL_CAP: u64 = 1_000_000_000;

/// Replicas per batch; batch boundaries fix the reduction order.
pub const DEFAULT_BATCH_SIZE: u64 = 4096;

/// Batches evaluated between early-stop checks.
const BATCHES_PER_ROUND: u64 = 16;

pub fn replica_rng(base_seed: u64, replica: u64) -> ReplicaRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(replica);
    rng
}

/// Worker count from `REPNET_WORKERS`, falling back to the available cores.
pub fn default_workers() -> usize {
    std::env::var("REPNET_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&w: &usize| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicaPlan {
    pub total_replicas: u64,
    pub worker_count: usize,
    pub base_seed: u64,
    pub batch_size: u64,
    /// Stop once the relative standard error drops below this value.
    pub target_relative_se: Option<f64>,
}

impl ReplicaPlan {
    pub fn new(total_replicas: u64, base_seed: u64) -> Self {
        ReplicaPlan {
            total_replicas,
            worker_count: default_workers(),
            base_seed,
            batch_size: DEFAULT_BATCH_SIZE,
            target_relative_se: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.worker_count = workers;
        self
    }

    pub fn with_replicas(mut self, total_replicas: u64) -> Self {
        self.total_replicas = total_replicas;
        self
    }

    pub fn with_seed(mut self, base_seed: u64) -> Self {
        self.base_seed = base_seed;
        self
    }

    pub fn with_batch_size(mut self, batch_size: u64) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn with_target_relative_se(mut self, target: f64) -> Self {
        self.target_relative_se = Some(target);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.total_replicas == 0 {
            return Err(Error::invalid("replicas", "must be positive"));
        }
        if self.worker_count == 0 {
            return Err(Error::invalid("workers", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be positive"));
        }
        if let Some(t) = self.target_relative_se {
            if !(t > 0.0) {
                return Err(Error::invalid("target_relative_se", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.count as f64 * other.count as f64) / n as f64;
        self.count = n;
    }

    fn result(&self) -> EstimatorResult {
        let variance = if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        };
        EstimatorResult::from_moments(self.mean, variance, self.count)
    }
}

/// One replica's value, tagged for replay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicaSample {
    pub replica: u64,
    pub seed: u64,
    pub value: f64,
}

fn run_batches<F>(sampler: &F, plan: &ReplicaPlan, keep: bool) -> Result<(EstimatorResult, Vec<ReplicaSample>)>
where
    F: Fn(&mut ReplicaRng) -> Result<f64> + Sync,
{
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.worker_count)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let batch_count = plan.total_replicas.div_ceil(plan.batch_size);
    let mut total = Moments::default();
    let mut samples = Vec::new();
    let mut next_batch = 0;
    while next_batch < batch_count {
        let round_end = if plan.target_relative_se.is_some() {
            (next_batch + BATCHES_PER_ROUND).min(batch_count)
        } else {
            batch_count
        };
        let batches: Vec<Result<(Moments, Vec<ReplicaSample>)>> = pool.install(|| {
            (next_batch..round_end)
                .into_par_iter()
                .map(|b| {
                    let start = b * plan.batch_size;
                    let end = (start + plan.batch_size).min(plan.total_replicas);
                    let mut moments = Moments::default();
                    let mut kept = Vec::new();
                    for replica in start..end {
                        let mut rng = replica_rng(plan.base_seed, replica);
                        let value = sampler(&mut rng).map_err(|e| Error::Replica {
                            replica,
                            source: Box::new(e),
                        })?;
                        moments.push(value);
                        if keep {
                            kept.push(ReplicaSample {
                                replica,
                                seed: plan.base_seed,
                                value,
                            });
                        }
                    }
                    Ok((moments, kept))
                })
                .collect()
        });
        for batch in batches {
            let (m, kept) = batch?;
            total.merge(&m);
            samples.extend(kept);
        }
        next_batch = round_end;
        if let Some(target) = plan.target_relative_se {
            let r = total.result();
            if total.count > 1 && r.relative_std_error() <= target {
                break;
            }
        }
    }
    Ok((total.result(), samples))
}

/// Runs `plan.total_replicas` independent samples and summarizes them.
pub fn estimate<F>(sampler: F, plan: &ReplicaPlan) -> Result<EstimatorResult>
where
    F: Fn(&mut ReplicaRng) -> Result<f64> + Sync,
{
    run_batches(&sampler, plan, false).map(|(r, _)| r)
}

/// As [`estimate`], also returning every per-replica value in replica order.
pub fn estimate_with_samples<F>(sampler: F, plan: &ReplicaPlan) -> Result<(EstimatorResult, Vec<ReplicaSample>)>
where
    F: Fn(&mut ReplicaRng) -> Result<f64> + Sync,
{
    run_batches(&sampler, plan, true)
}

/// Runs the sampler once per replica and returns the raw outputs in replica
/// order, for observables that are not a single scalar.
pub fn collect_replicas<T, F>(sampler: F, plan: &ReplicaPlan) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ReplicaRng) -> Result<T> + Sync,
{
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.worker_count)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let batch_count = plan.total_replicas.div_ceil(plan.batch_size);
    let batches: Vec<Result<Vec<T>>> = pool.install(|| {
        (0..batch_count)
            .into_par_iter()
            .map(|b| {
                let start = b * plan.batch_size;
                let end = (start + plan.batch_size).min(plan.total_replicas);
                (start..end)
                    .map(|replica| {
                        let mut rng = replica_rng(plan.base_seed, replica);
                        sampler(&mut rng).map_err(|e| Error::Replica {
                            replica,
                            source: Box::new(e),
                        })
                    })
                    .collect()
            })
            .collect()
    });
    let mut out = Vec::with_capacity(plan.total_replicas as usize);
    for batch in batches {
        out.extend(batch?);
    }
    Ok(out)
}

/// Writes samples as `replica,seed,value` CSV.
pub fn write_samples_csv<W: Write>(writer: W, samples: &[ReplicaSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(s).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

/// How link attempts consume random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoinMode {
    /// A draw only when a link attempts.
    #[default]
    Lazy,
    /// One draw per link per trial whether or not it attempts, so runs with
    /// different cutoffs on the same stream see identical link outcomes.
    Paired,
}

/// Dynamic state of a set of links evolving under one cutoff.
#[derive(Debug, Clone)]
pub struct LinkSet {
    probabilities: Vec<f64>,
    states: Vec<LinkAgeState>,
    policy: MemoryPolicy,
    live: usize,
}

impl LinkSet {
    pub fn new(probabilities: Vec<f64>, policy: MemoryPolicy) -> Self {
        let n = probabilities.len();
        LinkSet {
            probabilities,
            states: vec![LinkAgeState::Attempting; n],
            policy,
            live: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn live_count(&self) -> usize {
        self.live
    }

    pub fn all_live(&self) -> bool {
        self.live == self.states.len()
    }

    pub fn states(&self) -> &[LinkAgeState] {
        &self.states
    }

    pub fn is_live(&self, link: usize) -> bool {
        self.states[link].is_live()
    }

    /// One trial, drawing only for attempting links.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let mut live = 0;
        for (state, &p) in self.states.iter_mut().zip(&self.probabilities) {
            *state = state.advance(self.policy, || rng.random::<f64>() < p);
            live += usize::from(state.is_live());
        }
        self.live = live;
    }

    /// One trial using a pre-drawn uniform per link.
    pub fn step_with_uniforms(&mut self, uniforms: &[f64]) {
        let mut live = 0;
        for ((state, &p), &u) in self.states.iter_mut().zip(&self.probabilities).zip(uniforms) {
            *state = state.advance(self.policy, || u < p);
            live += usize::from(state.is_live());
        }
        self.live = live;
    }

    fn step_mode<R: Rng + ?Sized>(&mut self, rng: &mut R, mode: CoinMode, uniforms: &mut Vec<f64>) {
        match mode {
            CoinMode::Lazy => self.step(rng),
            CoinMode::Paired => {
                uniforms.clear();
                uniforms.extend((0..self.len()).map(|_| rng.random::<f64>()));
                self.step_with_uniforms(uniforms);
            }
        }
    }
}

fn check_edges(topology: &Topology, edges: &[usize]) -> Result<()> {
    if edges.is_empty() {
        return Err(Error::invalid("required_edges", "must be nonempty"));
    }
    if let Some(&bad) = edges.iter().find(|&&e| e >= topology.edge_count()) {
        return Err(Error::invalid("required_edges", format!("edge {bad} not in topology")));
    }
    Ok(())
}

/// Trials until every required edge is live at the end of the same trial.
pub fn sample_connection_trials<R: Rng + ?Sized>(
    topology: &Topology,
    required_edges: &[usize],
    links: &LinkModel,
    policy: MemoryPolicy,
    rng: &mut R,
) -> Result<u64> {
    sample_connection_trials_with(topology, required_edges, links, policy, CoinMode::Lazy, TRIAL_CAP, rng)
}

pub fn sample_connection_trials_with<R: Rng + ?Sized>(
    topology: &Topology,
    required_edges: &[usize],
    links: &LinkModel,
    policy: MemoryPolicy,
    mode: CoinMode,
    trial_cap: u64,
    rng: &mut R,
) -> Result<u64> {
    links.check_matches(topology)?;
    check_edges(topology, required_edges)?;
    let probs = required_edges.iter().map(|&e| links.probability(e)).collect();
    let mut set = LinkSet::new(probs, policy);
    let mut uniforms = Vec::new();
    for trial in 1..=trial_cap {
        set.step_mode(rng, mode, &mut uniforms);
        if set.all_live() {
            return Ok(trial);
        }
    }
    Err(Error::TrialCap { cap: trial_cap })
}

/// Connection trials for several cutoffs driven by the same per-link,
/// per-trial outcomes. Returns one count per policy, in order.
pub fn sample_connection_trials_paired<R: Rng + ?Sized>(
    probabilities: &[f64],
    policies: &[MemoryPolicy],
    rng: &mut R,
) -> Result<Vec<u64>> {
    let counts = sample_connection_trials_paired_censored(probabilities, policies, TRIAL_CAP, rng)?;
    match counts.iter().all(|c| c.is_some()) {
        true => Ok(counts.into_iter().flatten().collect()),
        false => Err(Error::TrialCap { cap: TRIAL_CAP }),
    }
}

/// As [`sample_connection_trials_paired`], stopping after `horizon` trials;
/// policies that have not connected by then report `None`.
pub fn sample_connection_trials_paired_censored<R: Rng + ?Sized>(
    probabilities: &[f64],
    policies: &[MemoryPolicy],
    horizon: u64,
    rng: &mut R,
) -> Result<Vec<Option<u64>>> {
    if probabilities.is_empty() {
        return Err(Error::invalid("required_edges", "must be nonempty"));
    }
    let mut sets: Vec<LinkSet> = policies
        .iter()
        .map(|&policy| LinkSet::new(probabilities.to_vec(), policy))
        .collect();
    let mut done = vec![None; policies.len()];
    let mut remaining = policies.len();
    let mut uniforms = vec![0.0; probabilities.len()];
    for trial in 1..=horizon {
        for u in uniforms.iter_mut() {
            *u = rng.random::<f64>();
        }
        for (set, finished) in sets.iter_mut().zip(done.iter_mut()) {
            if finished.is_none() {
                set.step_with_uniforms(&uniforms);
                if set.all_live() {
                    *finished = Some(trial);
                    remaining -= 1;
                }
            }
        }
        if remaining == 0 {
            break;
        }
    }
    Ok(done)
}

/// Trials until `a` and `b` are joined through simultaneously live edges.
pub fn sample_pair_connection_trials<R: Rng + ?Sized>(
    topology: &Topology,
    a: usize,
    b: usize,
    links: &LinkModel,
    policy: MemoryPolicy,
    rng: &mut R,
) -> Result<u64> {
    sample_pair_connection_trials_with(topology, a, b, links, policy, TRIAL_CAP, rng)
}

pub fn sample_pair_connection_trials_with<R: Rng + ?Sized>(
    topology: &Topology,
    a: usize,
    b: usize,
    links: &LinkModel,
    policy: MemoryPolicy,
    trial_cap: u64,
    rng: &mut R,
) -> Result<u64> {
    links.check_matches(topology)?;
    if a == b {
        return Err(Error::invalid("b", "endpoints must differ"));
    }
    if a >= topology.node_count() || b >= topology.node_count() {
        return Err(Error::invalid("a/b", "endpoint not in topology"));
    }
    let mut set = LinkSet::new(links.probabilities().to_vec(), policy);
    let mut uf = UnionFind::new(topology.node_count());
    for trial in 1..=trial_cap {
        set.step(rng);
        uf.reset();
        for (e, &(u, v)) in topology.edges().iter().enumerate() {
            if set.is_live(e) {
                uf.add_edge(u, v);
            }
        }
        if uf.connected(a, b) {
            return Ok(trial);
        }
    }
    Err(Error::TrialCap { cap: trial_cap })
}

/// Number of live links at the end of trial `n`.
pub fn sample_link_count<R: Rng + ?Sized>(links: &LinkModel, policy: MemoryPolicy, n: u64, rng: &mut R) -> Result<u64> {
    if n == 0 {
        return Err(Error::invalid("n", "at least one trial"));
    }
    let mut set = LinkSet::new(links.probabilities().to_vec(), policy);
    for _ in 0..n {
        set.step(rng);
    }
    Ok(set.live_count() as u64)
}

/// Largest cluster and total live links measured on the same snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClusterSample {
    /// Live edges in the largest connected component.
    pub largest: u64,
    pub live: u64,
}

/// Runs `n` trials on the whole topology and measures the live-edge clusters.
pub fn sample_largest_cluster<R: Rng + ?Sized>(
    topology: &Topology,
    links: &LinkModel,
    policy: MemoryPolicy,
    n: u64,
    rng: &mut R,
) -> Result<ClusterSample> {
    links.check_matches(topology)?;
    if n == 0 {
        return Err(Error::invalid("n", "at least one trial"));
    }
    let mut set = LinkSet::new(links.probabilities().to_vec(), policy);
    for _ in 0..n {
        set.step(rng);
    }
    let mut uf = UnionFind::new(topology.node_count());
    for (e, &(u, v)) in topology.edges().iter().enumerate() {
        if set.is_live(e) {
            uf.add_edge(u, v);
        }
    }
    Ok(ClusterSample {
        largest: uf.largest_component_edges() as u64,
        live: set.live_count() as u64,
    })
}

/// Per-trial link states recorded for auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    policy: MemoryPolicy,
    /// `states[t][e]`: state of link `e` at the end of trial `t + 1`.
    states: Vec<Vec<LinkAgeState>>,
}

impl TrialTrace {
    pub fn record<R: Rng + ?Sized>(links: &LinkModel, policy: MemoryPolicy, trials: u64, rng: &mut R) -> Self {
        let mut set = LinkSet::new(links.probabilities().to_vec(), policy);
        let mut states = Vec::with_capacity(trials as usize);
        for _ in 0..trials {
            set.step(rng);
            states.push(set.states().to_vec());
        }
        TrialTrace { policy, states }
    }

    pub fn trials(&self) -> usize {
        self.states.len()
    }

    pub fn live_edges(&self, trial: usize) -> Vec<usize> {
        self.states[trial - 1]
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_live())
            .map(|(e, _)| e)
            .collect()
    }

    /// Lengths of each establishment of `link`, with a flag for those cut
    /// short by the end of the recording.
    pub fn lifetimes(&self, link: usize) -> Vec<(u64, bool)> {
        let mut out = Vec::new();
        let mut current: Option<u64> = None;
        for row in &self.states {
            match row[link] {
                LinkAgeState::Live(0) => {
                    if let Some(len) = current.take() {
                        out.push((len, false));
                    }
                    current = Some(1);
                }
                LinkAgeState::Live(_) => {
                    if let Some(len) = current.as_mut() {
                        *len += 1;
                    }
                }
                LinkAgeState::Attempting => {
                    if let Some(len) = current.take() {
                        out.push((len, false));
                    }
                }
            }
        }
        if let Some(len) = current {
            out.push((len, true));
        }
        out
    }

    /// Checks that every completed establishment lasted exactly `n* + 1`
    /// trials and that ages advance by one per trial.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let links = self.states.first().map_or(0, Vec::len);
        for link in 0..links {
            let mut previous = LinkAgeState::Attempting;
            for (t, row) in self.states.iter().enumerate() {
                if let (LinkAgeState::Live(a), LinkAgeState::Live(b)) = (previous, row[link]) {
                    if b != 0 && b != a.saturating_add(1) {
                        return Err(format!("link {link} jumped from age {a} to {b} at trial {}", t + 1));
                    }
                }
                previous = row[link];
            }
            for (len, truncated) in self.lifetimes(link) {
                match self.policy {
                    MemoryPolicy::Finite(n_star) => {
                        let ok = if truncated { len <= n_star + 1 } else { len == n_star + 1 };
                        if !ok {
                            return Err(format!("link {link} lived {len} trials with n* = {n_star}"));
                        }
                    }
                    MemoryPolicy::Infinite => {
                        if !truncated {
                            return Err(format!("link {link} expired under infinite memory"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
