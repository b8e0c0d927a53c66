use serde::{Deserialize, Serialize};

use super::binomial::{ln_binomial_pmf, Bernoulli, BinomialDistribution};
use super::dominance::{convolve, dual_alpha, DominatingDistribution, TabulatedDistribution};
use super::{ConfidenceLevel, GuessSummary, PrivacyParams};
use crate::{AuditError, Result};

const BISECTION_STEPS: usize = 30;
// exp(eps) overflows past ~709; p-values have long saturated by then.
const EPS_CEILING: f64 = 700.0;

/// `min(1, β + α·2mδ)` for a dominating distribution, with `β = Pr[W* >= v]`.
pub fn p_value_from_dominating<D: DominatingDistribution + ?Sized>(
    dist: &D,
    v: i64,
    m: u64,
    delta: f64,
) -> f64 {
    let beta = dist.survival(v);
    if delta == 0.0 {
        return beta.clamp(0.0, 1.0);
    }
    let alpha = dual_alpha(dist, v, m);
    (beta + alpha * 2.0 * m as f64 * delta).clamp(0.0, 1.0)
}

/// Probability of at least `v` correct guesses when the mechanism is
/// `(ε, δ)`-DP, using the `Binomial(r, e^ε/(e^ε+1))` dominating distribution.
pub fn p_value_audit(g: &GuessSummary, params: &PrivacyParams) -> f64 {
    let dist = BinomialDistribution::for_guesses(g.r(), params.eps());
    p_value_from_dominating(&dist, g.v() as i64, g.m(), params.delta())
}

/// Both ends of the final bisection bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsSearch {
    /// Largest `ε` known to be rejected; the reported lower bound.
    pub lower: f64,
    /// Smallest `ε` known not to be rejected.
    pub upper: f64,
}

/// Bracket-and-bisect for the largest `ε` whose null is rejected at level
/// `beta`. `p_value` must be nondecreasing in `ε`.
///
/// The bracket grows by 1 until `p_value(upper) >= beta`, then 30 halvings
/// keep `p_value(lower) < beta <= p_value(upper)`. If even `ε = 0` is not
/// rejected the result is `lower = 0`.
pub fn eps_search_by(p_value: impl Fn(f64) -> f64, beta: f64) -> EpsSearch {
    let mut lower = 0.0;
    let mut upper = 1.0;
    while p_value(upper) < beta && upper < EPS_CEILING {
        upper += 1.0;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lower + upper);
        if p_value(mid) < beta {
            lower = mid;
        } else {
            upper = mid;
        }
    }
    EpsSearch { lower, upper }
}

/// The full bracket of the `ε` lower-bound search.
pub fn eps_search(
    m: u64,
    r: u64,
    v: u64,
    delta: f64,
    confidence: ConfidenceLevel,
) -> Result<EpsSearch> {
    let g = GuessSummary::from_totals(m, r, v)?;
    PrivacyParams::new(0.0, delta)?;
    let beta = confidence.beta();
    Ok(eps_search_by(
        |eps| {
            let dist = BinomialDistribution::for_guesses(r, eps);
            p_value_from_dominating(&dist, g.v() as i64, g.m(), delta)
        },
        beta,
    ))
}

/// Lower bound on `ε` holding with the given confidence: the null
/// `(ε_LB, δ)`-DP would have been rejected.
pub fn eps_lower_bound(
    m: u64,
    r: u64,
    v: u64,
    delta: f64,
    confidence: ConfidenceLevel,
) -> Result<f64> {
    Ok(eps_search(m, r, v, delta, confidence)?.lower)
}

/// Per-example inclusion probability other than one half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralPParams {
    p_incl: f64,
}

impl GeneralPParams {
    pub fn new(p_incl: f64) -> Result<Self> {
        if !(p_incl > 0.0 && p_incl < 1.0) {
            return Err(AuditError::param(
                "p_incl",
                format!("must be in (0, 1), got {p_incl}"),
            ));
        }
        Ok(Self { p_incl })
    }

    pub fn p_incl(&self) -> f64 {
        self.p_incl
    }

    /// Accuracy bound for positive guesses: `p e^ε / (p e^ε + 1 - p)`.
    pub fn q_plus(&self, eps: f64) -> Bernoulli {
        Self::tilted(self.p_incl, eps)
    }

    /// Accuracy bound for negative guesses: `(1-p) e^ε / ((1-p) e^ε + p)`.
    pub fn q_minus(&self, eps: f64) -> Bernoulli {
        Self::tilted(1.0 - self.p_incl, eps)
    }

    // a e^ε / (a e^ε + 1 - a) = 1 / (1 + ((1-a)/a) e^-ε), complement likewise.
    fn tilted(a: f64, eps: f64) -> Bernoulli {
        let odds = (1.0 - a) / a;
        Bernoulli::from_parts(
            1.0 / (1.0 + odds * (-eps).exp()),
            1.0 / (1.0 + eps.exp() / odds),
        )
    }
}

fn binomial_masses(n: u64, b: Bernoulli) -> Vec<f64> {
    (0..=n).map(|k| ln_binomial_pmf(n, k, b).exp()).collect()
}

/// The dominating distribution for unequal inclusion probability: the exact
/// convolution of `Binomial(k_plus, q_plus)` and `Binomial(k_minus, q_minus)`.
pub fn general_p_distribution(
    k_plus: u64,
    k_minus: u64,
    eps: f64,
    gp: &GeneralPParams,
) -> TabulatedDistribution {
    let plus = binomial_masses(k_plus, gp.q_plus(eps));
    let minus = binomial_masses(k_minus, gp.q_minus(eps));
    TabulatedDistribution::from_pmf(convolve(&plus, &minus))
}

/// p-value when each canary is included with probability `p_incl`.
pub fn p_value_general_p(
    m: u64,
    k_plus: u64,
    k_minus: u64,
    v: u64,
    params: &PrivacyParams,
    gp: &GeneralPParams,
) -> Result<f64> {
    let g = GuessSummary::new(m, k_plus, k_minus, v)?;
    let dist = general_p_distribution(g.k_plus(), g.k_minus(), params.eps(), gp);
    Ok(p_value_from_dominating(
        &dist,
        v as i64,
        m,
        params.delta(),
    ))
}
