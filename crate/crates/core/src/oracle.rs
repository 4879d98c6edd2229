// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact, non-sampled answers from small Markov chains.
//!
//! Each link evolves on the states `A, 0, 1, ..., n*` (attempting, or live
//! with that age). Links are independent, so the joint chain over `M` links
//! is the tensor product of the single-link chains and its transition
//! operator is applied one axis at a time.

use crate::error::{check_positive, check_probability, Error, Result};
use crate::model::MemoryPolicy;

/// Default limit on `M * (n*+2)^M`, the work of one sweep of the joint chain.
pub const DEFAULT_STATE_BUDGET: u64 = 50_000_000;

const CONVERGENCE_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000_000;

/// Joint age-vector chain for `M` links with a common cutoff.
#[derive(Debug, Clone)]
pub struct AgeVectorChain {
    probabilities: Vec<f64>,
    /// States per link: attempting plus every live age.
    arity: usize,
    state_count: usize,
    infinite: bool,
}

impl AgeVectorChain {
    pub fn new(p: f64, links: u32, cutoff: MemoryPolicy) -> Result<Self> {
        check_positive("M", u64::from(links))?;
        Self::heterogeneous(vec![p; links as usize], cutoff, DEFAULT_STATE_BUDGET)
    }

    /// One probability per link; `budget` bounds `M * (n*+2)^M`.
    pub fn heterogeneous(probabilities: Vec<f64>, cutoff: MemoryPolicy, budget: u64) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("M", "at least one link is required"));
        }
        for &p in &probabilities {
            check_probability("p", p)?;
        }
        let arity = match cutoff {
            MemoryPolicy::Finite(n) => n
                .checked_add(2)
                .ok_or_else(|| Error::invalid("n_star", "cutoff too large"))?,
            // Age is irrelevant without a cutoff: one absorbing live state per link.
            MemoryPolicy::Infinite => 2,
        };
        let m = probabilities.len() as u64;
        let states = (0..m).try_fold(1u64, |acc, _| acc.checked_mul(arity)).unwrap_or(u64::MAX);
        let work = states.saturating_mul(m);
        if work > budget {
            return Err(Error::BudgetExceeded {
                states,
                work,
                budget,
            });
        }
        Ok(AgeVectorChain {
            probabilities,
            arity: arity as usize,
            state_count: states as usize,
            infinite: cutoff == MemoryPolicy::Infinite,
        })
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn links(&self) -> usize {
        self.probabilities.len()
    }

    /// `out = P g`, where `P` is the one-trial transition operator.
    fn apply_transition(&self, g: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        let k = self.arity;
        let mut stride = 1usize;
        for &p in &self.probabilities {
            let block = stride * k;
            for base in (0..self.state_count).step_by(block) {
                for offset in 0..stride {
                    let at = |digit: usize| base + offset + digit * stride;
                    let attempt = p * g[at(1)] + (1.0 - p) * g[at(0)];
                    // digit 0: attempting; digit 1 + a: live with age a.
                    scratch[at(0)] = attempt;
                    for digit in 1..k - 1 {
                        scratch[at(digit)] = g[at(digit + 1)];
                    }
                    // Oldest live age resets and re-attempts; under the
                    // infinite policy the single live state is absorbing.
                    scratch[at(k - 1)] = if self.infinite {
                        g[at(1)]
                    } else {
                        attempt
                    };
                }
            }
            std::mem::swap(g, scratch);
            stride = block;
        }
    }

    /// Whether every link is live in the state with this index.
    fn all_live(&self, mut index: usize) -> bool {
        for _ in 0..self.links() {
            if index.is_multiple_of(self.arity) {
                return false;
            }
            index /= self.arity;
        }
        true
    }

    /// Expected trials from all-attempting until every link is live at the
    /// end of a trial, by fixed-point iteration of `h = 1 + P (mask h)`.
    pub fn expected_hitting_time(&self) -> Result<f64> {
        let mask: Vec<bool> = (0..self.state_count).map(|s| !self.all_live(s)).collect();
        let mut h = vec![0.0; self.state_count];
        let mut g = vec![0.0; self.state_count];
        let mut scratch = vec![0.0; self.state_count];
        let mut previous_residual = f64::INFINITY;
        for sweep in 1..=MAX_SWEEPS {
            for s in 0..self.state_count {
                g[s] = if mask[s] { h[s] } else { 0.0 };
            }
            self.apply_transition(&mut g, &mut scratch);
            let mut residual: f64 = 0.0;
            for s in 0..self.state_count {
                let next = 1.0 + g[s];
                residual = residual.max((next - h[s]).abs());
                h[s] = next;
            }
            // Iterates increase monotonically to the fixed point; with
            // contraction ratio r the remaining error is at most r/(1-r) times the
            // last step.
            let ratio = (residual / previous_residual).min(1.0);
            previous_residual = residual;
            let scale = h[0].abs().max(1.0);
            if ratio < 1.0 {
                let remaining = residual * ratio / (1.0 - ratio);
                if remaining < CONVERGENCE_TOLERANCE * scale && residual < CONVERGENCE_TOLERANCE * scale {
                    return Ok(h[0]);
                }
            }
            if sweep == MAX_SWEEPS {
                return Err(Error::NonConvergence {
                    what: "hitting-time iteration",
                    iterations: sweep,
                    residual,
                });
            }
        }
        unreachable!()
    }
}

/// Exact `E[N(M, n*)]` for chains within the default budget.
pub fn exact_expected_trials(p: f64, links: u32, cutoff: MemoryPolicy) -> Result<f64> {
    AgeVectorChain::new(p, links, cutoff)?.expected_hitting_time()
}

/// Distribution over per-link states after each of `n` trials, starting
/// from attempting. Entry 0 is attempting, entry `1 + a` live with age `a`.
fn single_link_distribution(p: f64, n_star: u64, n: u64) -> Vec<f64> {
    let k = n_star as usize + 2;
    let mut v = vec![0.0; k];
    let mut next = vec![0.0; k];
    v[0] = 1.0;
    for _ in 0..n {
        let attempting = v[0] + v[k - 1];
        next[0] = (1.0 - p) * attempting;
        next[1] = p * attempting;
        next[2..k].copy_from_slice(&v[1..k - 1]);
        std::mem::swap(&mut v, &mut next);
    }
    v
}

/// `q_n`: probability that one link is live at the end of trial `n`.
pub fn link_availability(p: f64, cutoff: MemoryPolicy, n: u64) -> Result<f64> {
    check_probability("p", p)?;
    match cutoff {
        MemoryPolicy::Infinite => Ok(if p >= 1.0 || n == 0 {
            if n == 0 { 0.0 } else { 1.0 }
        } else {
            -(n as f64 * (-p).ln_1p()).exp_m1()
        }),
        MemoryPolicy::Finite(n_star) => {
            // Ages beyond n are unreachable within n trials.
            let dist = single_link_distribution(p, n_star.min(n), n);
            Ok((1.0 - dist[0]).clamp(0.0, 1.0))
        }
    }
}

/// `q_n` for every `n` in `1..=n_max`.
pub fn link_availability_curve(p: f64, cutoff: MemoryPolicy, n_max: u64) -> Result<Vec<f64>> {
    (1..=n_max).map(|n| link_availability(p, cutoff, n)).collect()
}

/// `E[L_n(M, n*)] = M q_n`, exact by independence of links.
pub fn exact_expected_links(p: f64, cutoff: MemoryPolicy, n: u64, links: u32) -> Result<f64> {
    Ok(f64::from(links) * link_availability(p, cutoff, n)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum LatticeKind {
    Square,
    Triangular,
}

impl LatticeKind {
    /// Bond percolation threshold of the infinite lattice.
    pub fn bond_threshold(self) -> f64 {
        match self {
            LatticeKind::Square => 0.5,
            LatticeKind::Triangular => 2.0 * (std::f64::consts::PI / 18.0).sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Square => "square",
            LatticeKind::Triangular => "triangular",
        }
    }
}

impl std::str::FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" => Ok(LatticeKind::Square),
            "triangular" => Ok(LatticeKind::Triangular),
            other => Err(Error::invalid("lattice", format!("unknown lattice `{other}`"))),
        }
    }
}

/// Link probability at which the trial-`n` snapshot sits exactly at the
/// bond percolation threshold `p_c_bond`: solves `q_n(p) = p_c_bond`.
pub fn percolation_threshold_for_bond(p_c_bond: f64, cutoff: MemoryPolicy, n: u64) -> Result<f64> {
    if !(p_c_bond > 0.0 && p_c_bond < 1.0) {
        return Err(Error::invalid("p_c_bond", format!("{p_c_bond} is not in (0, 1)")));
    }
    check_positive("n", n)?;
    if cutoff == MemoryPolicy::Finite(0) {
        return Ok(p_c_bond);
    }
    let q = |p: f64| link_availability(p, cutoff, n);
    // q_n must increase along the bracket for bisection to be meaningful.
    let grid: Vec<f64> = (1..100).map(|i| f64::from(i) / 100.0).collect();
    let values = grid.iter().map(|&p| q(p)).collect::<Result<Vec<_>>>()?;
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Bracket("q_n is not monotone in p on (0, 1)".into()));
    }
    let (mut lo, mut hi) = (1e-12, 1.0);
    let f_lo = q(lo)? - p_c_bond;
    let f_hi = q(hi)? - p_c_bond;
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::Bracket(format!("q_n does not cross {p_c_bond} on (0, 1]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = q(mid)? - p_c_bond;
        if f.abs() < 1e-10 {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        what: "threshold bisection",
        iterations: 200,
        residual: hi - lo,
    })
}

pub fn percolation_threshold_semi_analytic(lattice: LatticeKind, n: u64, cutoff: MemoryPolicy) -> Result<f64> {
    percolation_threshold_for_bond(lattice.bond_threshold(), cutoff, n)
}
