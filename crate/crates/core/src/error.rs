// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} requires {requirement}; use {alternative} instead")]
    OutOfDomain {
        what: &'static str,
        requirement: String,
        alternative: &'static str,
    },

    #[error("edge list line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("trial cap of {cap} trials exceeded")]
    TrialCap { cap: u64 },

    #[error("state space of {states} states (work {work}) exceeds budget {budget}")]
    BudgetExceeded { states: u64, work: u64, budget: u64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("fit failure: {0}")]
    Fit(String),

    #[error("replica {replica}: {source}")]
    Replica {
        replica: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad inputs rather than runtime aborts.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter { .. }
            | Error::OutOfDomain { .. }
            | Error::Parse { .. }
            | Error::BudgetExceeded { .. } => true,
            Error::Replica { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{p} is not in (0, 1]")))
    }
}

pub(crate) fn check_positive(name: &'static str, value: u64) -> Result<()> {
    if value == 0 {
        Err(Error::invalid(name, "must be at least 1"))
    } else {
        Ok(())
    }
}
