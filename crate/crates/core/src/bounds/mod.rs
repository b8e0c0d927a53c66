//! Bounds on the number of correct membership guesses under a DP null.
//!
//! If a mechanism is `(ε, δ)`-DP then, when `r` ternary guesses are made about
//! uniformly random inclusion bits, the number of correct guesses is dominated
//! by `Binomial(r, e^ε/(e^ε+1))` up to a `δ`-dependent correction obtained from
//! a feasible solution of a small linear program. Everything in this module is
//! a pure function of its arguments.

mod analytic;
mod binomial;
mod dominance;
mod generalization;
mod pvalue;

pub use analytic::{adaptive_bound, hoeffding_p_value, AdaptiveBound};
pub use binomial::{binomial_pmf, binomial_sf, ln_binomial_pmf, Bernoulli, BinomialDistribution};
pub use dominance::{convolve, dual_alpha, DominatingDistribution, TabulatedDistribution};
pub use generalization::{
    generalization_bound, mi_bound, optimize_generalization_width, optimize_prior_width,
    prior_generalization_bound, GeneralizationWidth, PriorBound, PriorWidth,
};
pub use pvalue::{
    eps_lower_bound, eps_search, eps_search_by, p_value_audit, p_value_from_dominating,
    general_p_distribution, p_value_general_p, EpsSearch, GeneralPParams,
};

use serde::{Deserialize, Serialize};

use crate::{AuditError, Result};

/// An `(ε, δ)` pair. `ε` is in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    eps: f64,
    delta: f64,
}

impl PrivacyParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(AuditError::param("eps", format!("must be >= 0, got {eps}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(AuditError::param("delta", format!("must be in [0, 1], got {delta}")));
        }
        Ok(Self { eps, delta })
    }

    pub fn pure(eps: f64) -> Result<Self> {
        Self::new(eps, 0.0)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Accuracy of `ε`-randomized response, `e^ε/(e^ε+1)`.
    pub fn rr_accuracy(&self) -> Bernoulli {
        Bernoulli::rr_accuracy(self.eps)
    }
}

/// Counts summarizing one audit: `m` randomized examples, `k_plus` positive
/// and `k_minus` negative guesses, `v` of which were correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessSummary {
    m: u64,
    k_plus: u64,
    k_minus: u64,
    v: u64,
}

impl GuessSummary {
    pub fn new(m: u64, k_plus: u64, k_minus: u64, v: u64) -> Result<Self> {
        if m == 0 {
            return Err(AuditError::param("m", "must be positive"));
        }
        let r = k_plus
            .checked_add(k_minus)
            .ok_or_else(|| AuditError::param("k_plus + k_minus", "overflow"))?;
        if r > m {
            return Err(AuditError::param(
                "k_plus + k_minus",
                format!("{r} guesses exceed m = {m}"),
            ));
        }
        if v > r {
            return Err(AuditError::param(
                "v",
                format!("{v} correct guesses exceed r = {r}"),
            ));
        }
        Ok(Self {
            m,
            k_plus,
            k_minus,
            v,
        })
    }

    /// Summary when only the total number of guesses matters.
    pub fn from_totals(m: u64, r: u64, v: u64) -> Result<Self> {
        Self::new(m, r, 0, v)
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn k_plus(&self) -> u64 {
        self.k_plus
    }

    pub fn k_minus(&self) -> u64 {
        self.k_minus
    }

    /// Total number of non-abstaining guesses.
    pub fn r(&self) -> u64 {
        self.k_plus + self.k_minus
    }

    pub fn v(&self) -> u64 {
        self.v
    }
}

/// Failure probability `β` of a confidence statement; confidence is `1 - β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceLevel {
    beta: f64,
}

impl ConfidenceLevel {
    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(AuditError::param("beta", format!("must be in (0, 1), got {beta}")));
        }
        Ok(Self { beta })
    }

    /// From a confidence such as `0.95`.
    pub fn from_confidence(confidence: f64) -> Result<Self> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(AuditError::param(
                "confidence",
                format!("must be in (0, 1), got {confidence}"),
            ));
        }
        Self::from_beta(1.0 - confidence)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn confidence(&self) -> f64 {
        1.0 - self.beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn privacy_params_validation() {
        assert!(PrivacyParams::new(0.0, 0.0).is_ok());
        assert!(PrivacyParams::new(-0.1, 0.0).is_err());
        assert!(PrivacyParams::new(1.0, 1.5).is_err());
        assert!(PrivacyParams::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn guess_summary_invariants() {
        assert!(GuessSummary::new(10, 3, 4, 7).is_ok());
        assert!(GuessSummary::new(10, 6, 5, 0).is_err());
        assert!(GuessSummary::new(10, 3, 4, 8).is_err());
        assert!(GuessSummary::new(0, 0, 0, 0).is_err());
        assert_eq!(GuessSummary::new(10, 3, 4, 7).unwrap().r(), 7);
    }

    #[test]
    fn confidence_level_range() {
        assert!(ConfidenceLevel::from_beta(0.0).is_err());
        assert!(ConfidenceLevel::from_beta(1.0).is_err());
        let c = ConfidenceLevel::from_confidence(0.95).unwrap();
        assert!((c.beta() - 0.05).abs() < 1e-15);
    }
}
