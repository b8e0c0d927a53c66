use serde::{Deserialize, Serialize};

use super::binomial::BinomialDistribution;
use super::dominance::DominatingDistribution;
use super::PrivacyParams;
use crate::{AuditError, Result};

/// p-value from Hoeffding's inequality for bounded real-valued guesses with
/// `‖T‖₁ <= r1` and `‖T‖₂ <= r2`.
///
/// Uses `f(x) = exp(-2 (x - q r1)² / r2²)` above the mean (1 below) as the
/// dominating survival. For `v >= q r1 + 2` the `δ` slope is replaced by the
/// closed form `max(2/(v - q r1), f((v + q r1)/2))`; otherwise the slope is
/// maximized directly over `i = 1..=m`.
pub fn hoeffding_p_value(m: u64, r1: f64, r2: f64, v: f64, params: &PrivacyParams) -> Result<f64> {
    if !(r1 > 0.0) {
        return Err(AuditError::param("r1", format!("must be positive, got {r1}")));
    }
    if !(r2 > 0.0) {
        return Err(AuditError::param("r2", format!("must be positive, got {r2}")));
    }
    if !v.is_finite() {
        return Err(AuditError::param("v", "must be finite"));
    }
    let mean = params.rr_accuracy().p() * r1;
    let f = |x: f64| {
        if x >= mean {
            (-2.0 * (x - mean).powi(2) / (r2 * r2)).exp()
        } else {
            1.0
        }
    };
    let fv = f(v);
    let delta = params.delta();
    if delta == 0.0 {
        return Ok(fv.min(1.0));
    }
    let slope = if v >= mean + 2.0 {
        (2.0 / (v - mean)).max(f(0.5 * (v + mean)))
    } else {
        (1..=m)
            .map(|i| (f(v - i as f64) - fv) / i as f64)
            .fold(0.0, f64::max)
    };
    Ok((fv + 2.0 * m as f64 * delta * slope).clamp(0.0, 1.0))
}

/// Result of the adaptive-threshold bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveBound {
    /// Smallest `w` with `Pr[Binomial(r, e^ε/(e^ε+1)) >= w] <= γ`.
    pub quantile: u64,
    /// `quantile + τ`.
    pub threshold: f64,
    /// `min(1, γ + 2mδ/τ)`; bounds `Pr[W >= threshold]` under the null.
    pub p: f64,
}

/// Threshold that adapts to the number of guesses actually made.
pub fn adaptive_bound(
    m: u64,
    r_observed: u64,
    params: &PrivacyParams,
    gamma: f64,
    tau: f64,
) -> Result<AdaptiveBound> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(AuditError::param("gamma", format!("must be in [0, 1], got {gamma}")));
    }
    if !(tau > 0.0) {
        return Err(AuditError::param("tau", format!("must be positive, got {tau}")));
    }
    let dist = BinomialDistribution::for_guesses(r_observed, params.eps());
    // survival is nonincreasing and vanishes at r + 1
    let (mut lo, mut hi) = (0u64, r_observed + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if dist.survival(mid as i64) <= gamma {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let p = (gamma + 2.0 * m as f64 * params.delta() / tau).min(1.0);
    Ok(AdaptiveBound {
        quantile: lo,
        threshold: lo as f64 + tau,
        p,
    })
}
