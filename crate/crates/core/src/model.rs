// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Domain types shared by every other module: network topology, per-edge
//! success probabilities, memory cutoff, trial rate, and the per-trial
//! state of a single elementary link.

use serde::Serialize;

use crate::error::{check_probability, Error, Result};

/// Vacuum speed of light in km/s.
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

/// Fiber attenuation used throughout: one e-fold every 22 km.
pub const DEFAULT_ATTENUATION_PER_KM: f64 = 1.0 / 22.0;

/// Undirected multigraph with dense, stable edge indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::invalid("node_count", "must be positive"));
        }
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u == v {
                return Err(Error::invalid("edges", format!("edge {i} is a self-loop on node {u}")));
            }
            if u >= node_count || v >= node_count {
                return Err(Error::invalid(
                    "edges",
                    format!("edge {i} ({u}, {v}) references a node outside [0, {node_count})"),
                ));
            }
        }
        Ok(Topology { node_count, edges })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> (usize, usize) {
        self.edges[index]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(u, v)| u == node || v == node)
            .count()
    }

    pub fn all_edge_indices(&self) -> Vec<usize> {
        (0..self.edges.len()).collect()
    }
}

/// Success probability of one elementary link: `extra_loss * exp(-alpha * length)`,
/// boosted by `n_par` parallel attempts of which at least one must succeed.
pub fn effective_probability(length_km: f64, alpha: f64, extra_loss: f64, n_par: u32) -> Result<f64> {
    if !(length_km.is_finite() && length_km >= 0.0) {
        return Err(Error::invalid("length_km", format!("{length_km} must be a finite nonnegative length")));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::invalid("alpha", format!("{alpha} must be finite and nonnegative")));
    }
    check_probability("extra_loss", extra_loss)?;
    if n_par == 0 {
        return Err(Error::invalid("n_par", "at least one parallel link is required"));
    }
    let base = extra_loss * (-alpha * length_km).exp();
    // 1 - (1 - base)^n, evaluated without cancellation for small base.
    let fail = f64::from(n_par) * (-base).ln_1p();
    let p = -fail.exp_m1();
    if p > 0.0 {
        Ok(p.min(1.0))
    } else {
        Err(Error::invalid(
            "length_km",
            format!("link of {length_km} km has success probability underflowing to 0"),
        ))
    }
}

/// Per-edge success probabilities, indexed like the owning [`Topology`]'s edges.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    probabilities: Vec<f64>,
}

impl LinkModel {
    pub fn homogeneous(edge_count: usize, p: f64) -> Result<Self> {
        check_probability("p", p)?;
        Ok(LinkModel {
            probabilities: vec![p; edge_count],
        })
    }

    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        for &p in &probabilities {
            check_probability("p", p)?;
        }
        Ok(LinkModel { probabilities })
    }

    pub fn from_lengths(lengths_km: &[f64], alpha: f64, extra_loss: f64, n_par: u32) -> Result<Self> {
        let probabilities = lengths_km
            .iter()
            .map(|&l| effective_probability(l, alpha, extra_loss, n_par))
            .collect::<Result<Vec<_>>>()?;
        Ok(LinkModel { probabilities })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probability(&self, edge: usize) -> f64 {
        self.probabilities[edge]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// The common probability, or an error if the edges disagree.
    pub fn homogeneous_probability(&self) -> Result<f64> {
        let first = *self
            .probabilities
            .first()
            .ok_or_else(|| Error::invalid("link_model", "no edges"))?;
        if self.probabilities.iter().all(|&p| p == first) {
            Ok(first)
        } else {
            Err(Error::invalid("link_model", "closed forms require homogeneous link probabilities"))
        }
    }

    pub(crate) fn check_matches(&self, topology: &Topology) -> Result<()> {
        if self.len() == topology.edge_count() {
            Ok(())
        } else {
            Err(Error::invalid(
                "link_model",
                format!("{} probabilities for {} edges", self.len(), topology.edge_count()),
            ))
        }
    }
}

/// Memory cutoff `n*`: how many further trials a live link survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MemoryPolicy {
    Finite(u64),
    Infinite,
}

impl MemoryPolicy {
    /// `n* = floor(R t*)`.
    pub fn from_cutoff_time(rate: RateModel, cutoff_seconds: f64) -> Result<Self> {
        if !(cutoff_seconds.is_finite() && cutoff_seconds >= 0.0) {
            return Err(Error::invalid("cutoff_seconds", format!("{cutoff_seconds} is not a valid duration")));
        }
        Ok(MemoryPolicy::Finite((rate.trials_per_second() * cutoff_seconds).floor() as u64))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            MemoryPolicy::Finite(n) => Some(n),
            MemoryPolicy::Infinite => None,
        }
    }

    /// Whether a link with this age is discarded before the next trial.
    #[inline]
    pub fn expires(self, age: u64) -> bool {
        match self {
            MemoryPolicy::Finite(n) => age >= n,
            MemoryPolicy::Infinite => false,
        }
    }
}

impl std::fmt::Display for MemoryPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MemoryPolicy::Finite(n) => write!(f, "{n}"),
            MemoryPolicy::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for MemoryPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" | "Infinite" | "∞" => Ok(MemoryPolicy::Infinite),
            other => other
                .parse::<u64>()
                .map(MemoryPolicy::Finite)
                .map_err(|_| Error::invalid("cutoff", format!("`{other}` is neither an integer nor `inf`"))),
        }
    }
}

/// Trial repetition rate in trials per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateModel {
    trials_per_second: f64,
}

impl RateModel {
    pub fn new(trials_per_second: f64) -> Result<Self> {
        if trials_per_second.is_finite() && trials_per_second > 0.0 {
            Ok(RateModel { trials_per_second })
        } else {
            Err(Error::invalid("rate", format!("{trials_per_second} trials/s must be positive")))
        }
    }

    /// `R = c / l`: one round of classical signalling per elementary link.
    pub fn from_link_length(length_km: f64) -> Result<Self> {
        if !(length_km.is_finite() && length_km > 0.0) {
            return Err(Error::invalid("length_km", format!("{length_km} must be positive")));
        }
        Self::new(SPEED_OF_LIGHT_KM_S / length_km)
    }

    pub fn trials_per_second(&self) -> f64 {
        self.trials_per_second
    }

    pub fn trials_to_seconds(&self, trials: f64) -> f64 {
        trials / self.trials_per_second
    }
}

pub fn trials_to_time(trials: f64, rate: RateModel) -> Result<f64> {
    if !(trials >= 0.0) {
        return Err(Error::invalid("trials", format!("{trials} must be nonnegative")));
    }
    Ok(rate.trials_to_seconds(trials))
}

/// State of one elementary link at the end of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LinkAgeState {
    #[default]
    Attempting,
    /// Established `age` trials ago (0 = in the current trial).
    Live(u64),
}

impl LinkAgeState {
    #[inline]
    pub fn is_live(self) -> bool {
        matches!(self, LinkAgeState::Live(_))
    }

    /// Runs one trial. Links at the cutoff are reset first and re-attempt in
    /// the same trial; `attempt` is only called when the link attempts.
    #[inline]
    pub fn advance(self, policy: MemoryPolicy, attempt: impl FnOnce() -> bool) -> Self {
        match self {
            LinkAgeState::Live(age) if !policy.expires(age) => LinkAgeState::Live(age.saturating_add(1)),
            _ => {
                if attempt() {
                    LinkAgeState::Live(0)
                } else {
                    LinkAgeState::Attempting
                }
            }
        }
    }
}

/// Summary of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    pub sample_count: u64,
    pub ci_95: (f64, f64),
}

impl EstimatorResult {
    /// Builds the summary from a mean and an unbiased sample variance.
    pub fn from_moments(mean: f64, variance: f64, sample_count: u64) -> Self {
        let std_error = if sample_count > 1 {
            (variance.max(0.0) / sample_count as f64).sqrt()
        } else {
            0.0
        };
        EstimatorResult {
            mean,
            std_error,
            sample_count,
            ci_95: (mean - 1.96 * std_error, mean + 1.96 * std_error),
        }
    }

    pub fn relative_std_error(&self) -> f64 {
        if self.mean == 0.0 {
            if self.std_error == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.std_error / self.mean.abs()
        }
    }

    /// True when `value` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_rejects_self_loops_and_bad_ids() {
        assert!(Topology::new(2, vec![(0, 0)]).is_err());
        assert!(Topology::new(2, vec![(0, 2)]).is_err());
        assert!(Topology::new(0, vec![]).is_err());
        let t = Topology::new(3, vec![(0, 1), (1, 2), (0, 1)]).unwrap();
        assert_eq!(t.edge_count(), 3);
        assert_eq!(t.degree(1), 3);
    }

    #[test]
    fn effective_probability_examples() {
        assert_eq!(effective_probability(0.0, 1.0 / 22.0, 1.0, 1).unwrap(), 1.0);
        let p = effective_probability(22.0, 1.0 / 22.0, 1.0, 1).unwrap();
        assert!((p - (-1.0f64).exp()).abs() < 1e-15);
        // base 0.3 from extra loss alone
        let p2 = effective_probability(0.0, 0.0, 0.3, 2).unwrap();
        assert!((p2 - 0.51).abs() < 1e-15);
    }

    #[test]
    fn effective_probability_rejects_bad_inputs() {
        assert!(effective_probability(-1.0, 0.1, 1.0, 1).is_err());
        assert!(effective_probability(1.0, -0.1, 1.0, 1).is_err());
        assert!(effective_probability(1.0, 0.1, 0.0, 1).is_err());
        assert!(effective_probability(1.0, 0.1, 1.5, 1).is_err());
        assert!(effective_probability(1.0, 0.1, 1.0, 0).is_err());
    }

    #[test]
    fn effective_probability_monotone_on_grid() {
        let lengths = [0.0, 5.0, 20.0, 60.0];
        let alphas = [0.0, 0.02, 1.0 / 22.0, 0.1];
        let losses = [0.1, 0.5, 0.9, 1.0];
        for &l in &lengths {
            for &a in &alphas {
                for &e in &losses {
                    let mut prev = 0.0;
                    for n in 1..6 {
                        let p = effective_probability(l, a, e, n).unwrap();
                        assert!(p >= prev);
                        prev = p;
                    }
                    let longer = effective_probability(l + 1.0, a, e, 2).unwrap();
                    let lossier = effective_probability(l, a + 0.01, e, 2).unwrap();
                    let here = effective_probability(l, a, e, 2).unwrap();
                    assert!(longer <= here && lossier <= here);
                    if e < 1.0 {
                        assert!(effective_probability(l, a, (e + 0.05).min(1.0), 2).unwrap() >= here);
                    }
                }
            }
        }
    }

    #[test]
    fn trials_to_time_examples() {
        let r = RateModel::from_link_length(37.0).unwrap();
        assert_eq!(trials_to_time(0.0, r).unwrap(), 0.0);
        let t = trials_to_time(2.0, r).unwrap();
        assert!((t - 246.8e-6).abs() < 0.1e-6, "{t}");
        let r40 = RateModel::from_link_length(40.0).unwrap();
        assert!((r40.trials_per_second() - 7494.8).abs() < 0.1);
        assert!((trials_to_time(7.5e3, r40).unwrap() - 1.0).abs() < 1e-3);
        assert!(RateModel::new(0.0).is_err());
        assert!(RateModel::new(-3.0).is_err());
        assert!(trials_to_time(-1.0, r).is_err());
    }

    #[test]
    fn cutoff_from_time_floors() {
        let r = RateModel::new(1000.0).unwrap();
        assert_eq!(MemoryPolicy::from_cutoff_time(r, 0.0025).unwrap(), MemoryPolicy::Finite(2));
        assert_eq!("inf".parse::<MemoryPolicy>().unwrap(), MemoryPolicy::Infinite);
        assert_eq!("7".parse::<MemoryPolicy>().unwrap(), MemoryPolicy::Finite(7));
        assert!("x".parse::<MemoryPolicy>().is_err());
    }

    #[test]
    fn link_lives_exactly_cutoff_plus_one_trials() {
        for n_star in 0..5u64 {
            let policy = MemoryPolicy::Finite(n_star);
            let mut s = LinkAgeState::Attempting.advance(policy, || true);
            let mut live_trials = 1;
            loop {
                let mut attempted = false;
                s = s.advance(policy, || {
                    attempted = true;
                    false
                });
                if attempted {
                    break;
                }
                live_trials += 1;
            }
            assert_eq!(live_trials, n_star + 1);
            assert_eq!(s, LinkAgeState::Attempting);
        }
    }

    #[test]
    fn reset_link_reattempts_in_same_trial() {
        let policy = MemoryPolicy::Finite(0);
        let s = LinkAgeState::Live(0).advance(policy, || true);
        assert_eq!(s, LinkAgeState::Live(0));
        let inf = LinkAgeState::Live(u64::MAX).advance(MemoryPolicy::Infinite, || unreachable!());
        assert!(inf.is_live());
    }

    #[test]
    fn estimator_ci() {
        let r = EstimatorResult::from_moments(2.0, 4.0, 100);
        assert!((r.std_error - 0.2).abs() < 1e-15);
        assert!((r.ci_95.0 - (2.0 - 0.392)).abs() < 1e-12);
        assert!((r.ci_95.1 - (2.0 + 0.392)).abs() < 1e-12);
    }
}
