// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Engineering thresholds built on the closed forms, the oracle and the
//! simulator: the smallest useful memory cutoff, the shortest repeater chain
//! that beats direct transmission, and the critical link probability of a
//! lattice.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::analytic::{self, InfiniteMemoryMethod};
use crate::error::{check_positive, check_probability, Error, Result};
use crate::model::{EstimatorResult, LinkModel, MemoryPolicy, Topology, DEFAULT_ATTENUATION_PER_KM};
use crate::montecarlo::{self, ReplicaPlan};
use crate::oracle::{self, LatticeKind};
use crate::topology;

/// Largest cutoff the bracketing search will try.
const MAX_CUTOFF: u64 = 1 << 24;

/// How `E[N(M, n*)]` is evaluated while searching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffEstimator {
    Oracle,
    /// Paired differences `N(M, n*) - N(M, inf)` on shared link outcomes.
    /// Replicas start at `plan.total_replicas` and double (up to
    /// `max_replicas`) while the 95% interval straddles the threshold.
    MonteCarlo { plan: ReplicaPlan, max_replicas: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffProbe {
    pub n_star: u64,
    /// Estimated `E[N(M, n*)]`.
    pub expected_trials: f64,
    /// Standard error of the estimate (0 for exact evaluations).
    pub std_error: f64,
    pub replicas: u64,
    /// Replicas whose finite-cutoff run hit the simulation horizon; while
    /// nonzero the estimate is a lower bound.
    pub censored: u64,
    pub within_tolerance: bool,
    /// False when the Monte Carlo budget ran out with the interval still
    /// covering the threshold; the point estimate decided.
    pub decided: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffSearch {
    pub n_star_min: u64,
    /// `E[N(M, inf)]`.
    pub optimal_trials: f64,
    /// `(1 + tolerance) E[N(M, inf)]`.
    pub threshold_trials: f64,
    pub probes: Vec<CutoffProbe>,
}

impl CutoffSearch {
    /// Whether every probe was decided with 95% confidence.
    pub fn all_decided(&self) -> bool {
        self.probes.iter().all(|p| p.decided)
    }

    pub fn confidence_statement(&self) -> String {
        let undecided: Vec<u64> = self.probes.iter().filter(|p| !p.decided).map(|p| p.n_star).collect();
        if undecided.is_empty() {
            format!("all {} probes decided at 95% confidence", self.probes.len())
        } else {
            format!("probes at n* = {undecided:?} decided by point estimate (interval covered the threshold)")
        }
    }
}

/// Smallest cutoff whose expected connection time is within `tolerance`
/// (relative) of the infinite-memory optimum.
pub fn find_min_cutoff(p: f64, links: u32, tolerance: f64, estimator: CutoffEstimator) -> Result<CutoffSearch> {
    check_probability("p", p)?;
    check_positive("M", u64::from(links))?;
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::invalid("tolerance", format!("{tolerance} must be positive")));
    }
    let optimal = analytic::expected_trials_infinite_memory(p, links, InfiniteMemoryMethod::SurvivalSeries)?;
    let threshold = (1.0 + tolerance) * optimal;
    let mut probes = Vec::new();

    let no_memory = analytic::expected_trials_no_memory(p, links)?;
    let zero_ok = no_memory.value() <= threshold;
    probes.push(CutoffProbe {
        n_star: 0,
        expected_trials: no_memory.value(),
        std_error: 0.0,
        replicas: 0,
        censored: 0,
        within_tolerance: zero_ok,
        decided: true,
    });
    if zero_ok {
        return Ok(CutoffSearch {
            n_star_min: 0,
            optimal_trials: optimal,
            threshold_trials: threshold,
            probes,
        });
    }

    let mut probe = |n_star: u64| -> Result<bool> {
        let result = match estimator {
            CutoffEstimator::Oracle => {
                let value = oracle::exact_expected_trials(p, links, MemoryPolicy::Finite(n_star))?;
                CutoffProbe {
                    n_star,
                    expected_trials: value,
                    std_error: 0.0,
                    replicas: 0,
                    censored: 0,
                    within_tolerance: value <= threshold,
                    decided: true,
                }
            }
            CutoffEstimator::MonteCarlo { plan, max_replicas } => {
                paired_probe(p, links, n_star, optimal, threshold, plan, max_replicas)?
            }
        };
        let ok = result.within_tolerance;
        probes.push(result);
        Ok(ok)
    };

    // Exponential bracketing, then bisection on the monotone expectation.
    let (mut lo, mut hi) = (0u64, 1u64);
    while !probe(hi)? {
        lo = hi;
        hi *= 2;
        if hi > MAX_CUTOFF {
            return Err(Error::Bracket(format!("no cutoff up to {MAX_CUTOFF} reaches the tolerance")));
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CutoffSearch {
        n_star_min: hi,
        optimal_trials: optimal,
        threshold_trials: threshold,
        probes,
    })
}

fn paired_probe(
    p: f64,
    links: u32,
    n_star: u64,
    optimal: f64,
    threshold: f64,
    plan: ReplicaPlan,
    max_replicas: u64,
) -> Result<CutoffProbe> {
    let probabilities = vec![p; links as usize];
    let policies = [MemoryPolicy::Finite(n_star), MemoryPolicy::Infinite];
    let margin = threshold - optimal;
    // Replicas are censored far beyond the geometric tail of any cutoff near
    // the threshold; a censored finite-cutoff run counts as the horizon.
    let horizon = (50.0 * optimal).ceil() as u64 + 1000;
    let sampler = |rng: &mut montecarlo::ReplicaRng| -> Result<(f64, bool)> {
        let counts = montecarlo::sample_connection_trials_paired_censored(&probabilities, &policies, horizon, rng)?;
        let finite = counts[0].unwrap_or(horizon) as f64;
        let infinite = counts[1].unwrap_or(horizon) as f64;
        Ok((finite - infinite, counts[0].is_none()))
    };
    // Small pilot first so that cutoffs far from the threshold are cheap.
    let mut replicas = plan.total_replicas.clamp(1, 1000);
    loop {
        let draws = montecarlo::collect_replicas(sampler, &plan.with_replicas(replicas))?;
        let censored = draws.iter().filter(|d| d.1).count() as u64;
        let n = draws.len() as f64;
        let mean = draws.iter().map(|d| d.0).sum::<f64>() / n;
        let variance = draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let r = EstimatorResult::from_moments(mean, variance, draws.len() as u64);
        let verdict = if r.ci_95.1 < margin {
            Some(true)
        } else if r.ci_95.0 > margin {
            Some(false)
        } else {
            None
        };
        let at_budget = replicas >= max_replicas.max(plan.total_replicas);
        if let Some(ok) = verdict.filter(|_| replicas >= plan.total_replicas || verdict == Some(false)) {
            return Ok(CutoffProbe {
                n_star,
                expected_trials: optimal + r.mean,
                std_error: r.std_error,
                replicas,
                censored,
                within_tolerance: ok,
                decided: true,
            });
        }
        if at_budget {
            return Ok(CutoffProbe {
                n_star,
                expected_trials: optimal + r.mean,
                std_error: r.std_error,
                replicas,
                censored,
                within_tolerance: r.mean <= margin,
                decided: false,
            });
        }
        replicas = if replicas < plan.total_replicas {
            plan.total_replicas
        } else {
            (replicas * 2).min(max_replicas)
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainLengthThreshold {
    pub links: u32,
    /// Length where the best repeater rate equals the repeaterless capacity.
    pub crossing_km: f64,
    /// Last grid length at which the capacity is still not beaten; the
    /// chain wins at every grid length beyond it.
    pub l_min_km: f64,
}

/// Rate advantage of an `M`-link chain of total length `L` over direct
/// transmission, with `p = exp(-alpha L / M)`.
pub fn rate_minus_capacity(links: u32, total_length_km: f64, alpha: f64) -> Result<f64> {
    let p = (-alpha * total_length_km / f64::from(links)).exp();
    let rate = analytic::achievable_rate_infinite_cutoff(p, links)?;
    let capacity = analytic::repeaterless_capacity((-alpha * total_length_km).exp())?;
    Ok(rate - capacity)
}

/// Total chain length beyond which the repeater chain beats the repeaterless
/// capacity, searched on `[resolution, 500]` km.
pub fn find_min_chain_length(links: u32, alpha: f64, resolution_km: f64) -> Result<ChainLengthThreshold> {
    if links < 2 {
        return Err(Error::invalid("M", "a repeater chain needs at least two links"));
    }
    if !(alpha > 0.0 && resolution_km > 0.0) {
        return Err(Error::invalid("alpha", "attenuation and resolution must be positive"));
    }
    const MAX_LENGTH_KM: f64 = 500.0;
    let f = |l: f64| rate_minus_capacity(links, l, alpha);
    let steps = (MAX_LENGTH_KM / resolution_km).floor() as u64;
    let mut previous = resolution_km;
    let mut bracket = None;
    if f(previous)? > 0.0 {
        return Err(Error::Bracket(format!("chain already beats capacity at {previous} km")));
    }
    for i in 2..=steps {
        let l = i as f64 * resolution_km;
        if f(l)? > 0.0 {
            bracket = Some((previous, l));
            break;
        }
        previous = l;
    }
    let (last_losing, first_winning) = bracket.ok_or_else(|| {
        Error::Bracket(format!("no crossover between rate and capacity in [{resolution_km}, {MAX_LENGTH_KM}] km"))
    })?;
    let (mut lo, mut hi) = (last_losing, first_winning);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ChainLengthThreshold {
        links,
        crossing_km: 0.5 * (lo + hi),
        l_min_km: last_losing,
    })
}

pub fn find_min_chain_length_default(links: u32) -> Result<ChainLengthThreshold> {
    find_min_chain_length(links, DEFAULT_ATTENUATION_PER_KM, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PCritMethod {
    LogisticFit,
    SemiAnalytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PCritConfig {
    pub lattice: LatticeKind,
    pub width: usize,
    pub height: usize,
    /// Observation trial.
    pub n: u64,
    pub cutoff: MemoryPolicy,
    /// Coarse sweep size over (0, 1).
    pub grid_points: usize,
    /// Spacing of the refined sweep around the provisional transition.
    pub refine_spacing: f64,
    pub refine_half_width: f64,
    /// Replicas per coarse point; refined points use the plan's count.
    pub coarse_replicas: u64,
    pub plan: ReplicaPlan,
}

impl PCritConfig {
    pub fn new(lattice: LatticeKind, size: usize, cutoff: MemoryPolicy, plan: ReplicaPlan) -> Self {
        PCritConfig {
            lattice,
            width: size,
            height: size,
            n: 10,
            cutoff,
            grid_points: 41,
            refine_spacing: 0.005,
            refine_half_width: 0.05,
            coarse_replicas: plan.total_replicas.div_ceil(4).max(1),
            plan,
        }
    }
}

/// One point of a largest-cluster sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p: f64,
    /// `(1/M) E[S_n^max]`.
    pub mean_fraction: f64,
    pub std_error: f64,
    /// Mean share of the live links that sit in the largest cluster.
    pub cluster_share: f64,
    pub cluster_share_std_error: f64,
    pub replicas: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogisticCurve {
    pub midpoint: f64,
    pub steepness: f64,
    pub midpoint_std_error: f64,
}

impl LogisticCurve {
    pub fn eval(&self, p: f64) -> f64 {
        1.0 / (1.0 + (-self.steepness * (p - self.midpoint)).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PCritEstimate {
    pub method: PCritMethod,
    pub p_crit: f64,
    pub std_error: f64,
    /// Point of steepest rise in the refined sweep (diagnostic).
    pub steepest_slope_p: Option<f64>,
    pub fit: Option<LogisticCurve>,
    pub sweep: Vec<SweepPoint>,
}

pub fn lattice_topology(kind: LatticeKind, width: usize, height: usize) -> Result<Topology> {
    match kind {
        LatticeKind::Square => topology::square_lattice(width, height),
        LatticeKind::Triangular => topology::triangular_lattice(width, height),
    }
}

/// Samples one sweep point on `topology`.
pub fn sweep_point(topology: &Topology, p: f64, n: u64, cutoff: MemoryPolicy, plan: &ReplicaPlan) -> Result<SweepPoint> {
    let links = LinkModel::homogeneous(topology.edge_count(), p)?;
    let m = topology.edge_count() as f64;
    let samples = montecarlo::collect_replicas(
        |rng| montecarlo::sample_largest_cluster(topology, &links, cutoff, n, rng),
        plan,
    )?;
    let mut fraction = Vec::with_capacity(samples.len());
    let mut share = Vec::with_capacity(samples.len());
    for c in &samples {
        let largest = c.largest as f64;
        fraction.push(largest / m);
        share.push(if c.live > 0 { largest / c.live as f64 } else { 0.0 });
    }
    let (f_mean, f_se) = mean_and_se(&fraction);
    let (s_mean, s_se) = mean_and_se(&share);
    Ok(SweepPoint {
        p,
        mean_fraction: f_mean,
        std_error: f_se,
        cluster_share: s_mean,
        cluster_share_std_error: s_se,
        replicas: samples.len() as u64,
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Critical link probability at observation trial `n`.
///
/// `LogisticFit` sweeps `p`, refines around the provisional transition and
/// fits a logistic curve to the share of live links in the largest cluster;
/// its midpoint is the estimate. `SemiAnalytic` solves `q_n(p) = p_c` with
/// the bond threshold of the infinite lattice.
pub fn estimate_p_crit(config: &PCritConfig, method: PCritMethod) -> Result<PCritEstimate> {
    check_positive("n", config.n)?;
    match method {
        PCritMethod::SemiAnalytic => {
            let p = oracle::percolation_threshold_semi_analytic(config.lattice, config.n, config.cutoff)?;
            Ok(PCritEstimate {
                method,
                p_crit: p,
                std_error: 0.0,
                steepest_slope_p: None,
                fit: None,
                sweep: Vec::new(),
            })
        }
        PCritMethod::LogisticFit => logistic_p_crit(config),
    }
}

fn logistic_p_crit(config: &PCritConfig) -> Result<PCritEstimate> {
    if config.width < 100 || config.height < 100 {
        return Err(Error::invalid("size", "lattices must be at least 100x100 for the sweep"));
    }
    if config.grid_points < 5 {
        return Err(Error::Fit("insufficient sweep resolution: need at least 5 coarse points".into()));
    }
    let coarse_spacing = 0.98 / (config.grid_points - 1) as f64;
    if !(config.refine_spacing > 0.0 && config.refine_spacing < coarse_spacing && config.refine_half_width >= 2.0 * config.refine_spacing) {
        return Err(Error::Fit("insufficient sweep resolution: refined spacing must be finer than the coarse grid".into()));
    }
    let topology = lattice_topology(config.lattice, config.width, config.height)?;
    let coarse_plan = config.plan.with_replicas(config.coarse_replicas);

    let mut sweep = Vec::new();
    for i in 0..config.grid_points {
        let p = 0.01 + coarse_spacing * i as f64;
        sweep.push(sweep_point(&topology, p, config.n, config.cutoff, &coarse_plan)?);
    }
    let provisional = sweep
        .windows(2)
        .find(|w| w[0].cluster_share < 0.5 && w[1].cluster_share >= 0.5)
        .map(|w| {
            let t = (0.5 - w[0].cluster_share) / (w[1].cluster_share - w[0].cluster_share);
            w[0].p + t * (w[1].p - w[0].p)
        })
        .ok_or_else(|| Error::Fit("largest-cluster share never crosses one half: no sigmoidal transition".into()))?;

    let steps = (config.refine_half_width / config.refine_spacing).round() as i64;
    let mut refined = Vec::new();
    for j in -steps..=steps {
        let p = provisional + j as f64 * config.refine_spacing;
        if p <= 0.0 || p >= 1.0 {
            continue;
        }
        refined.push(sweep_point(&topology, p, config.n, config.cutoff, &config.plan)?);
    }
    let fit = fit_logistic(&refined, provisional)?;
    let steepest_slope_p = refined
        .windows(2)
        .max_by(|a, b| {
            let sa = a[1].cluster_share - a[0].cluster_share;
            let sb = b[1].cluster_share - b[0].cluster_share;
            sa.total_cmp(&sb)
        })
        .map(|w| 0.5 * (w[0].p + w[1].p));
    sweep.extend(refined);
    sweep.sort_by(|a, b| a.p.total_cmp(&b.p));
    Ok(PCritEstimate {
        method: PCritMethod::LogisticFit,
        p_crit: fit.midpoint,
        std_error: fit.midpoint_std_error,
        steepest_slope_p,
        fit: Some(fit),
        sweep,
    })
}

/// Least-squares fit of `1 / (1 + exp(-k (p - p0)))` to the cluster shares
/// by Levenberg-Marquardt.
pub fn fit_logistic(points: &[SweepPoint], initial_midpoint: f64) -> Result<LogisticCurve> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("{} points are too few for a logistic fit", points.len())));
    }
    let residuals = |p0: f64, k: f64| -> f64 {
        points
            .iter()
            .map(|pt| {
                let r = pt.cluster_share - 1.0 / (1.0 + (-k * (pt.p - p0)).exp());
                r * r
            })
            .sum()
    };
    let span = points.last().unwrap().p - points[0].p;
    let (mut p0, mut k) = (initial_midpoint, 8.0 / span.max(1e-6));
    let mut lambda = 1e-3;
    let mut cost = residuals(p0, k);
    let jacobian = |p0: f64, k: f64| -> (Matrix2<f64>, Vector2<f64>) {
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for pt in points {
            let y = 1.0 / (1.0 + (-k * (pt.p - p0)).exp());
            let dy = y * (1.0 - y);
            let j = Vector2::new(-k * dy, (pt.p - p0) * dy);
            jtj += j * j.transpose();
            jtr += j * (pt.cluster_share - y);
        }
        (jtj, jtr)
    };
    for _ in 0..500 {
        let (jtj, jtr) = jacobian(p0, k);
        let damped = jtj + Matrix2::from_diagonal(&jtj.diagonal()) * lambda;
        let Some(inv) = damped.try_inverse() else {
            return Err(Error::Fit("singular normal equations".into()));
        };
        let step = inv * jtr;
        let (np0, nk) = (p0 + step[0], k + step[1]);
        let new_cost = residuals(np0, nk);
        if new_cost < cost {
            let converged = (cost - new_cost) < 1e-14 * cost.max(1e-300) || step.norm() < 1e-12;
            p0 = np0;
            k = nk;
            cost = new_cost;
            lambda = (lambda / 10.0).max(1e-12);
            if converged {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    if !(k > 0.0) || !p0.is_finite() || p0 < points[0].p || p0 > points.last().unwrap().p {
        return Err(Error::Fit(format!("non-sigmoidal data (midpoint {p0}, steepness {k})")));
    }
    let (jtj, _) = jacobian(p0, k);
    let dof = (points.len() - 2) as f64;
    let sigma2 = cost / dof;
    let midpoint_std_error = jtj.try_inverse().map_or(f64::NAN, |c| (c[(0, 0)] * sigma2).sqrt());
    Ok(LogisticCurve {
        midpoint: p0,
        steepness: k,
        midpoint_std_error,
    })
}
