// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form expected connection times, distributions, link fractions
//! and rate/capacity comparisons for homogeneous links.
//!
//! Probability powers go through `ln_1p`/`exp_m1` throughout so that the
//! `p -> 0` and `M -> large` corners keep their relative precision. Values
//! that can leave the `f64` range are returned as a [`Magnitude`].

mod dd;

use serde::Serialize;

use crate::error::{check_positive, check_probability, Error, Result};
use crate::model::MemoryPolicy;
use dd::DoubleDouble;

/// Largest link count the alternating sum accepts.
pub const ALTERNATING_SUM_MAX_LINKS: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTolerance {
    pub tail_epsilon: f64,
    pub max_terms: u64,
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        SeriesTolerance {
            tail_epsilon: 1e-12,
            max_terms: 10_000_000,
        }
    }
}

impl SeriesTolerance {
    fn validate(&self) -> Result<()> {
        if self.tail_epsilon > 0.0 && self.tail_epsilon.is_finite() && self.max_terms > 0 {
            Ok(())
        } else {
            Err(Error::invalid("tolerance", "tail_epsilon must be positive and max_terms nonzero"))
        }
    }
}

/// A truncated series together with an upper bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: u64,
}

/// A positive quantity stored by its base-10 logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Magnitude {
    pub log10: f64,
}

impl Magnitude {
    pub fn from_value(value: f64) -> Self {
        Magnitude { log10: value.log10() }
    }

    /// The plain value; `inf` or `0` outside the `f64` range.
    pub fn value(&self) -> f64 {
        10f64.powf(self.log10)
    }

    pub fn is_representable(&self) -> bool {
        self.log10.abs() < 300.0
    }

    pub fn scaled(&self, factor: f64) -> Magnitude {
        Magnitude {
            log10: self.log10 + factor.log10(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InfiniteMemoryMethod {
    /// Inclusion-exclusion over subsets of links.
    AlternatingSum,
    /// Tail-sum of the maximum of geometric variables.
    #[default]
    SurvivalSeries,
}

/// `(1-p)^n`, with `0^0 = 1`.
#[inline]
pub(crate) fn pow_fail(p: f64, n: f64) -> f64 {
    if n == 0.0 {
        1.0
    } else if p >= 1.0 {
        0.0
    } else {
        (n * (-p).ln_1p()).exp()
    }
}

/// `(1 - x)^m` for `x` in [0, 1].
#[inline]
fn pow_complement(x: f64, m: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else {
        (m * (-x).ln_1p()).exp()
    }
}

/// `1 - (1 - x)^m`.
#[inline]
fn one_minus_pow_complement(x: f64, m: f64) -> f64 {
    if x >= 1.0 {
        1.0
    } else {
        -(m * (-x).ln_1p()).exp_m1()
    }
}

fn check_links(m: u32) -> Result<()> {
    check_positive("M", u64::from(m))
}

/// Expected trials without memory: every link must succeed in the same trial.
pub fn expected_trials_no_memory(p: f64, m: u32) -> Result<Magnitude> {
    check_probability("p", p)?;
    check_links(m)?;
    Ok(Magnitude {
        log10: -f64::from(m) * p.log10(),
    })
}

/// Expected trials with unlimited memory, i.e. the mean of the maximum of
/// `m` independent geometric(p) variables.
pub fn expected_trials_infinite_memory(p: f64, m: u32, method: InfiniteMemoryMethod) -> Result<f64> {
    match method {
        InfiniteMemoryMethod::AlternatingSum => alternating_sum(p, m),
        InfiniteMemoryMethod::SurvivalSeries => {
            survival_series(p, m, 1, SeriesTolerance::default()).map(|s| s.value)
        }
    }
}

/// Survival-series form with explicit tolerance and tail bound.
pub fn expected_trials_infinite_memory_series(p: f64, m: u32, tol: SeriesTolerance) -> Result<SeriesValue> {
    survival_series(p, m, 1, tol)
}

fn alternating_sum(p: f64, m: u32) -> Result<f64> {
    check_probability("p", p)?;
    check_links(m)?;
    if m > ALTERNATING_SUM_MAX_LINKS {
        return Err(Error::OutOfDomain {
            what: "alternating sum",
            requirement: format!("M <= {ALTERNATING_SUM_MAX_LINKS} (got {m})"),
            alternative: "InfiniteMemoryMethod::SurvivalSeries",
        });
    }
    let q = DoubleDouble::ONE - DoubleDouble::from_f64(p);
    let mut binom: u128 = 1;
    let mut sum = DoubleDouble::from_f64(0.0);
    for k in 1..=m {
        binom = binom * u128::from(m - k + 1) / u128::from(k);
        let denom = DoubleDouble::ONE - q.powi(k);
        let term = DoubleDouble::from_u128(binom) / denom;
        sum = if k % 2 == 1 { sum + term } else { sum - term };
    }
    Ok(sum.to_f64())
}

/// `sum_{n>=1} (1 - (1 - (1-p)^{n-1})^m)^paths`.
fn survival_series(p: f64, m: u32, paths: u32, tol: SeriesTolerance) -> Result<SeriesValue> {
    check_probability("p", p)?;
    check_links(m)?;
    check_positive("n_P", u64::from(paths))?;
    tol.validate()?;
    if p == 1.0 {
        return Ok(SeriesValue {
            value: 1.0,
            tail_bound: 0.0,
            terms: 1,
        });
    }
    let (mf, pf) = (f64::from(m), f64::from(paths));
    let mut sum = 0.0;
    let mut n: u64 = 1;
    loop {
        let x = pow_fail(p, (n - 1) as f64);
        let survive_one = one_minus_pow_complement(x, mf);
        let term = if paths == 1 { survive_one } else { survive_one.powf(pf) };
        sum += term;
        // Each path survives past trial n with probability at most m (1-p)^n,
        // and the geometric majorant sums to m (1-p)^n / p.
        let tail_bound = (mf * pow_fail(p, n as f64) / p).min(f64::MAX);
        if tail_bound < tol.tail_epsilon {
            return Ok(SeriesValue {
                value: sum,
                tail_bound,
                terms: n,
            });
        }
        if n >= tol.max_terms {
            return Err(Error::NonConvergence {
                what: "survival series",
                iterations: n as usize,
                residual: tail_bound,
            });
        }
        n += 1;
    }
}

/// `Pr[N(M, inf) = n]` for `n >= 1`.
pub fn pmf_trials_infinite_memory(p: f64, m: u32, n: u64) -> Result<f64> {
    pmf_trials_parallel_infinite(p, m, 1, n)
}

pub fn pmf_trials_infinite_memory_range(p: f64, m: u32, ns: impl IntoIterator<Item = u64>) -> Result<Vec<f64>> {
    ns.into_iter().map(|n| pmf_trials_infinite_memory(p, m, n)).collect()
}

/// Expected trials for two links as printed in the two-link closed form
/// commonly quoted for cutoff memories, transcribed verbatim.
///
/// This does not reproduce `1/p^2` at `n* = 0` under the one-trial-per-step
/// accounting used elsewhere in this crate; prefer
/// [`crate::oracle::exact_expected_trials`] for actual values.
pub fn expected_trials_two_links_cjkk(p: f64, cutoff: MemoryPolicy) -> Result<f64> {
    check_probability("p", p)?;
    let r = match cutoff {
        MemoryPolicy::Finite(n) => pow_fail(p, n as f64),
        MemoryPolicy::Infinite => 0.0,
    };
    let numerator = 3.0 - 2.0 * p * (1.0 - r) - 2.0 * r;
    let denominator = 2.0 * (2.0 - p * (1.0 - 2.0 * r) - 2.0 * r);
    Ok(numerator / denominator)
}

/// Expected trials over `paths` parallel `m`-link paths without memory.
pub fn expected_trials_parallel_no_memory(p: f64, m: u32, paths: u32) -> Result<Magnitude> {
    check_probability("p", p)?;
    check_links(m)?;
    check_positive("n_P", u64::from(paths))?;
    let log_path = f64::from(m) * p.ln();
    let log10 = if log_path > -700.0 {
        let path_success = log_path.exp();
        let all_fail_ln = f64::from(paths) * (-path_success).ln_1p();
        -(-all_fail_ln.exp_m1()).log10()
    } else {
        // 1 - (1 - s)^n ~ n s once s underflows
        -(f64::from(paths).log10() + f64::from(m) * p.log10())
    };
    Ok(Magnitude { log10 })
}

/// `Pr[N(M, inf; n_P) = n]`: first trial at which some path is complete.
pub fn pmf_trials_parallel_infinite(p: f64, m: u32, paths: u32, n: u64) -> Result<f64> {
    check_probability("p", p)?;
    check_links(m)?;
    check_positive("n_P", u64::from(paths))?;
    check_positive("n", n)?;
    let (mf, pf) = (f64::from(m), f64::from(paths));
    let survive = |trials: u64| {
        let s = one_minus_pow_complement(pow_fail(p, trials as f64), mf);
        if paths == 1 {
            s
        } else {
            s.powf(pf)
        }
    };
    let upper = pow_complement(pow_fail(p, (n - 1) as f64), mf);
    let lower = pow_complement(pow_fail(p, n as f64), mf);
    // For one path the cdf difference is better conditioned than the survival difference.
    let value = if paths == 1 {
        lower - upper
    } else {
        survive(n - 1) - survive(n)
    };
    Ok(value.clamp(0.0, 1.0))
}

pub fn expected_trials_parallel_infinite(p: f64, m: u32, paths: u32) -> Result<f64> {
    survival_series(p, m, paths, SeriesTolerance::default()).map(|s| s.value)
}

pub fn expected_trials_parallel_infinite_series(p: f64, m: u32, paths: u32, tol: SeriesTolerance) -> Result<SeriesValue> {
    survival_series(p, m, paths, tol)
}

/// Expected fraction of live links after `n` trials while no link can yet
/// have expired (`n <= n* + 1`).
pub fn expected_link_fraction_exact(p: f64, n: u64, cutoff: MemoryPolicy) -> Result<f64> {
    check_probability("p", p)?;
    check_positive("n", n)?;
    if let MemoryPolicy::Finite(n_star) = cutoff {
        if n > n_star.saturating_add(1) {
            return Err(Error::OutOfDomain {
                what: "exact link fraction",
                requirement: format!("n <= n* + 1 (got n = {n}, n* = {n_star})"),
                alternative: "oracle::link_availability or Monte Carlo",
            });
        }
    }
    Ok(if p >= 1.0 { 1.0 } else { -(n as f64 * (-p).ln_1p()).exp_m1() })
}

/// Fewest trials after which the expected live fraction can reach `f`,
/// whatever the cutoff.
pub fn min_trials_for_fraction(f: f64, p: f64) -> Result<u64> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::invalid("f", format!("{f} is not in (0, 1)")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("{p} is not in (0, 1)")));
    }
    let ratio = (-f).ln_1p() / (-p).ln_1p();
    let nearest = ratio.round();
    // Snap ratios that are integers up to rounding, e.g. log(0.25)/log(0.5).
    let trials = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    Ok(trials.max(1.0) as u64)
}

/// Point-to-point capacity of the pure-loss channel, in ebits per channel use.
pub fn repeaterless_capacity(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid("eta", format!("{eta} is not in (0, 1)")));
    }
    Ok(-(-eta).ln_1p() / std::f64::consts::LN_2)
}

/// Best rate of the protocol: one end-to-end ebit per `E[N(M, inf)]` trials,
/// two channel uses per trial.
pub fn achievable_rate_infinite_cutoff(p: f64, m: u32) -> Result<f64> {
    let trials = expected_trials_infinite_memory(p, m, InfiniteMemoryMethod::SurvivalSeries)?;
    Ok(1.0 / (2.0 * trials))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALT: InfiniteMemoryMethod = InfiniteMemoryMethod::AlternatingSum;
    const SER: InfiniteMemoryMethod = InfiniteMemoryMethod::SurvivalSeries;

    #[test]
    fn no_memory_examples() {
        assert_eq!(expected_trials_no_memory(1.0, 5).unwrap().value(), 1.0);
        assert!((expected_trials_no_memory(0.5, 2).unwrap().value() - 4.0).abs() < 1e-12);
        let big = expected_trials_no_memory((-40.0f64 / 22.0).exp(), 100).unwrap();
        assert!((big.log10 - 78.96).abs() < 0.2, "{}", big.log10);
        assert!(expected_trials_no_memory(0.0, 3).is_err());
        assert!(expected_trials_no_memory(0.5, 0).is_err());
    }

    #[test]
    fn infinite_memory_examples() {
        for method in [ALT, SER] {
            assert!((expected_trials_infinite_memory(1.0, 7, method).unwrap() - 1.0).abs() < 1e-15);
            let v = expected_trials_infinite_memory(0.5, 2, method).unwrap();
            assert!((v - 8.0 / 3.0).abs() < 1e-12, "{v}");
            // Ten links within ten trials on average needs p of at least 0.25;
            // the exact crossing sits near 0.265.
            assert!(expected_trials_infinite_memory(0.25, 10, method).unwrap() > 10.0);
            assert!(expected_trials_infinite_memory(0.27, 10, method).unwrap() <= 10.0);
        }
    }

    #[test]
    fn alternating_sum_refuses_large_m() {
        let err = expected_trials_infinite_memory(0.5, 61, ALT).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain { .. }));
        assert!(expected_trials_infinite_memory(0.5, 61, SER).is_ok());
    }

    #[test]
    fn single_link_is_geometric_mean() {
        for &p in &[0.01, 0.1, 0.37, 0.9] {
            let v = expected_trials_infinite_memory(p, 1, SER).unwrap();
            assert!((v - 1.0 / p).abs() <= 1e-12 * (1.0 / p));
        }
    }

    #[test]
    fn series_reports_tail_bound() {
        let tol = SeriesTolerance::default();
        let s = expected_trials_infinite_memory_series(0.3, 20, tol).unwrap();
        assert!(s.tail_bound < tol.tail_epsilon);
        assert!(s.terms > 1);
        let tight = SeriesTolerance {
            tail_epsilon: 1e-12,
            max_terms: 5,
        };
        assert!(expected_trials_infinite_memory_series(0.01, 10, tight).is_err());
    }

    #[test]
    fn sandwich_between_bounds() {
        for &p in &[0.05, 0.3, 0.7, 1.0] {
            for m in 1..30u32 {
                let lower = expected_trials_infinite_memory(p, m, SER).unwrap();
                let upper = expected_trials_no_memory(p, m).unwrap().value();
                if m == 1 || p == 1.0 {
                    assert!((lower - upper).abs() <= 1e-9 * upper);
                } else {
                    assert!(lower < upper, "p={p} m={m}");
                }
            }
        }
    }

    #[test]
    fn pmf_examples_and_normalization() {
        for n in 1..20 {
            let g = pmf_trials_infinite_memory(0.3, 1, n).unwrap();
            assert!((g - 0.3 * 0.7f64.powi(n as i32 - 1)).abs() < 1e-15);
        }
        assert!((pmf_trials_infinite_memory(0.5, 2, 1).unwrap() - 0.25).abs() < 1e-15);
        let total: f64 = pmf_trials_infinite_memory_range(0.2, 7, 1..2000).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean: f64 = (1..2000u64)
            .map(|n| n as f64 * pmf_trials_infinite_memory(0.2, 7, n).unwrap())
            .sum();
        let direct = expected_trials_infinite_memory(0.2, 7, SER).unwrap();
        assert!((mean - direct).abs() < 1e-9);
    }

    #[test]
    fn cjkk_transcription() {
        assert!((expected_trials_two_links_cjkk(1.0, MemoryPolicy::Finite(0)).unwrap() - 0.5).abs() < 1e-15);
        assert!((expected_trials_two_links_cjkk(0.5, MemoryPolicy::Finite(0)).unwrap() - 1.0).abs() < 1e-15);
        let limit = expected_trials_two_links_cjkk(0.5, MemoryPolicy::Infinite).unwrap();
        assert!((limit - 2.0 / 3.0).abs() < 1e-15);
        let large = expected_trials_two_links_cjkk(0.5, MemoryPolicy::Finite(200)).unwrap();
        assert!((large - limit).abs() < 1e-12);
    }

    #[test]
    fn parallel_no_memory() {
        assert!((expected_trials_parallel_no_memory(0.4, 3, 1).unwrap().value() - 0.4f64.powi(-3)).abs() < 1e-10);
        let v = expected_trials_parallel_no_memory(0.5, 2, 2).unwrap().value();
        assert!((v - 16.0 / 7.0).abs() < 1e-12);
        assert!((expected_trials_parallel_no_memory(1.0, 9, 3).unwrap().value() - 1.0).abs() < 1e-15);
        // p^M underflows: 1 / (n_P p^M)
        let tiny = expected_trials_parallel_no_memory(1e-4, 200, 5).unwrap();
        assert!((tiny.log10 - (800.0 - 5f64.log10())).abs() < 1e-9);
    }

    #[test]
    fn parallel_infinite() {
        for &p in &[0.1, 0.5, 0.9] {
            for m in 1..6u32 {
                let single = expected_trials_parallel_infinite(p, m, 1).unwrap();
                let direct = expected_trials_infinite_memory(p, m, SER).unwrap();
                assert_eq!(single, direct);
                for n in 1..10 {
                    assert_eq!(
                        pmf_trials_parallel_infinite(p, m, 1, n).unwrap(),
                        pmf_trials_infinite_memory(p, m, n).unwrap()
                    );
                }
            }
        }
        let v = expected_trials_parallel_infinite(0.5, 1, 2).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-12);
        let total: f64 = (1..3000).map(|n| pmf_trials_parallel_infinite(0.1, 4, 3, n).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn parallel_infinite_monotone_grid() {
        for &p in &[0.1, 0.3, 0.6] {
            for m in 1..6u32 {
                for k in 1..5u32 {
                    let here = expected_trials_parallel_infinite(p, m, k).unwrap();
                    assert!(expected_trials_parallel_infinite(p, m, k + 1).unwrap() <= here);
                    assert!(expected_trials_parallel_infinite(p, m + 1, k).unwrap() >= here);
                }
            }
        }
    }

    #[test]
    fn link_fraction() {
        assert!((expected_link_fraction_exact(0.3, 1, MemoryPolicy::Finite(0)).unwrap() - 0.3).abs() < 1e-15);
        assert!((expected_link_fraction_exact(0.5, 2, MemoryPolicy::Finite(1)).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(expected_link_fraction_exact(1.0, 1, MemoryPolicy::Finite(3)).unwrap(), 1.0);
        assert!(expected_link_fraction_exact(0.5, 3, MemoryPolicy::Finite(1)).is_err());
        assert!(expected_link_fraction_exact(0.5, 300, MemoryPolicy::Infinite).is_ok());
    }

    #[test]
    fn min_trials() {
        for &p in &[0.1, 0.25, 0.5, 0.9] {
            assert_eq!(min_trials_for_fraction(p, p).unwrap(), 1);
        }
        assert_eq!(min_trials_for_fraction(0.75, 0.5).unwrap(), 2);
        assert_eq!(min_trials_for_fraction(0.99, 0.1).unwrap(), 44);
        assert!(min_trials_for_fraction(1.0, 0.5).is_err());
        assert!(min_trials_for_fraction(0.5, 1.0).is_err());
        assert!(min_trials_for_fraction(0.5, 0.0).is_err());
    }

    #[test]
    fn capacity_and_rate() {
        assert!((repeaterless_capacity(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(repeaterless_capacity(0.0).is_err());
        assert!(repeaterless_capacity(1.0).is_err());
        assert!((achievable_rate_infinite_cutoff(1.0, 12).unwrap() - 0.5).abs() < 1e-15);
        let rate = achievable_rate_infinite_cutoff((-63.0f64 / 44.0).exp(), 2).unwrap();
        let cap = repeaterless_capacity((-63.0f64 / 22.0).exp()).unwrap();
        assert!((rate - cap).abs() / cap < 0.05, "rate {rate} capacity {cap}");
    }

    #[test]
    fn rate_capacity_crossing_is_unique() {
        for m in [2u32, 3, 4, 5, 10] {
            let diff = |l: f64| {
                achievable_rate_infinite_cutoff((-l / (22.0 * f64::from(m))).exp(), m).unwrap()
                    - repeaterless_capacity((-l / 22.0).exp()).unwrap()
            };
            let signs: Vec<bool> = (1..=200).map(|l| diff(l as f64) > 0.0).collect();
            let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
            assert_eq!(changes, 1, "M={m}");
        }
    }
}
