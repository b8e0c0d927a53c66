use serde::{Deserialize, Serialize};

use super::binomial::BinomialDistribution;
use super::dominance::{dual_alpha, DominatingDistribution};
use super::PrivacyParams;
use crate::numeric::log_grid;
use crate::{AuditError, Result};

// guards the ceiling against representation error in (1 + γ - 1.5η) n / 2
const CEIL_SLACK: f64 = 1e-9;

/// Three-term tail bound for the number of correct guesses of an
/// `(ε, δ)`-DP algorithm on `n` fresh samples exceeding `(1 + γ) n / 2`.
///
/// Requires `γ >= 1.5 η >= 0`.
pub fn generalization_bound(n: u64, params: &PrivacyParams, gamma: f64, eta: f64) -> Result<f64> {
    if !(eta >= 0.0) || !(gamma >= 1.5 * eta) || !gamma.is_finite() {
        return Err(AuditError::param(
            "gamma",
            format!("need gamma >= 1.5 * eta >= 0, got gamma={gamma}, eta={eta}"),
        ));
    }
    if n == 0 {
        return Err(AuditError::param("n", "must be positive"));
    }
    let nf = n as f64;
    let t = (1.0 + gamma - 1.5 * eta) * nf / 2.0;
    let threshold = (t - CEIL_SLACK).ceil() as i64;
    let dist = BinomialDistribution::for_guesses(n, params.eps());
    let s1 = dist.survival(threshold);
    let hoeffding = 2.0 * (-nf * eta * eta / 2.0).exp();
    let slack = if params.delta() > 0.0 {
        2.0 * nf * params.delta() * dual_alpha(&dist, threshold, n)
    } else {
        0.0
    };
    Ok((s1 + hoeffding + slack).min(1.0))
}

/// Error and failure probability of the baseline transfer theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorBound {
    pub error: f64,
    pub failure: f64,
}

/// `error = α + e^ε - 1 + c + 2d`, `failure = β/c + δ/d`. The failure term
/// is the raw formula value and may exceed 1.
pub fn prior_generalization_bound(
    alpha_acc: f64,
    beta_acc: f64,
    params: &PrivacyParams,
    c: f64,
    d: f64,
) -> Result<PriorBound> {
    if !(c > 0.0) {
        return Err(AuditError::param("c", format!("must be positive, got {c}")));
    }
    if !(d > 0.0) {
        return Err(AuditError::param("d", format!("must be positive, got {d}")));
    }
    Ok(PriorBound {
        error: alpha_acc + params.eps().exp_m1() + c + 2.0 * d,
        failure: beta_acc / c + params.delta() / d,
    })
}

/// Smallest error width found by [`optimize_generalization_width`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationWidth {
    pub gamma: f64,
    pub eta: f64,
    /// `β_acc + generalization_bound(n, params, gamma, eta)`.
    pub failure: f64,
}

/// Minimizes `γ` subject to `β_acc + generalization_bound(..) <= target`.
///
/// `η` runs over a log grid on `[1e-3, 0.5]` and `γ` over a uniform grid of
/// step `1e-3` on `[1.5η, 1]`. Returns `None` when nothing is feasible.
pub fn optimize_generalization_width(
    n: u64,
    params: &PrivacyParams,
    beta_acc: f64,
    target: f64,
) -> Result<Option<GeneralizationWidth>> {
    const GAMMA_STEP: f64 = 1e-3;
    let mut best: Option<GeneralizationWidth> = None;
    for eta in log_grid(1e-3, 0.5, 200) {
        let start = (1.5 * eta / GAMMA_STEP).ceil() as usize;
        let stop = best.map_or(1000, |b| (b.gamma / GAMMA_STEP).round() as usize);
        for k in start..stop.min(1000) + 1 {
            let gamma = (k as f64 * GAMMA_STEP).max(1.5 * eta);
            if best.is_some_and(|b| gamma >= b.gamma) {
                break;
            }
            let failure = beta_acc + generalization_bound(n, params, gamma, eta)?;
            if failure <= target {
                best = Some(GeneralizationWidth { gamma, eta, failure });
                break;
            }
        }
    }
    Ok(best)
}

/// Smallest `c + 2d + e^ε - 1` found by [`optimize_prior_width`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorWidth {
    pub c: f64,
    pub d: f64,
    pub width: f64,
    pub failure: f64,
}

/// Minimizes the baseline error width subject to `β/c + δ/d <= target`.
///
/// `c` runs over a 4000-point log grid on `[1e-6, 1]`; for each `c` the
/// smallest feasible `d` is taken in closed form.
pub fn optimize_prior_width(params: &PrivacyParams, beta_acc: f64, target: f64) -> Result<Option<PriorWidth>> {
    let mut best: Option<PriorWidth> = None;
    for c in log_grid(1e-6, 1.0, 4000) {
        let room = target - beta_acc / c;
        if room <= 0.0 {
            continue;
        }
        let d = if params.delta() == 0.0 {
            1e-12
        } else {
            params.delta() / room
        };
        let b = prior_generalization_bound(0.0, beta_acc, params, c, d)?;
        if b.failure > target * (1.0 + 1e-12) {
            continue;
        }
        if best.is_none_or(|w| b.error < w.width) {
            best = Some(PriorWidth {
                c,
                d,
                width: b.error,
                failure: b.failure,
            });
        }
    }
    Ok(best)
}

fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.ln() };
    term(x) + term(1.0 - x)
}

/// Upper bound (nats) on the mutual information between `n` independently
/// included records and the output of an `(ε, δ)`-DP algorithm.
pub fn mi_bound(n: u64, params: &PrivacyParams, p_incl: f64) -> Result<f64> {
    if !(p_incl > 0.0 && p_incl < 1.0) {
        return Err(AuditError::param("p_incl", format!("must be in (0, 1), got {p_incl}")));
    }
    let (eps, delta) = (params.eps(), params.delta());
    let nf = n as f64;
    let tilt = p_incl + (1.0 - 2.0 * p_incl) / (eps.exp() + 1.0);
    // ln(1 + e^-ε) + ε/(e^ε + 1), written to stay finite for large ε
    let offset = (-eps).exp().ln_1p() + eps / (eps.exp() + 1.0);
    let value = nf * delta * binary_entropy(p_incl) + nf * (1.0 - delta) * (binary_entropy(tilt) - offset);
    Ok(value.max(0.0))
}
