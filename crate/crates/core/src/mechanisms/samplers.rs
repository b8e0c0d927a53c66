use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::auditor::{GuessVector, ScoreVector, SelectionVector};
use crate::bounds::Bernoulli;
use crate::{AuditError, Result};

/// `ε`-DP randomized response on the inclusion bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RRConfig {
    eps: f64,
}

impl RRConfig {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(AuditError::param("eps", format!("must be >= 0, got {eps}")));
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `e^ε / (e^ε + 1)`.
    pub fn accuracy(&self) -> f64 {
        Bernoulli::rr_accuracy(self.eps).p()
    }
}

fn flip<R: Rng + ?Sized>(s: i8, p_correct: f64, rng: &mut R) -> i8 {
    if rng.random::<f64>() < p_correct {
        s
    } else {
        -s
    }
}

/// Reports each bit truthfully with probability `e^ε/(e^ε+1)`, never abstains.
pub fn randomized_response<R: Rng + ?Sized>(s: &SelectionVector, cfg: &RRConfig, rng: &mut R) -> GuessVector {
    let p = cfg.accuracy();
    GuessVector::from_raw(s.as_slice().iter().map(|&x| flip(x, p, rng)).collect())
}

/// Releases `S_i·Δ/2 + N(0, σ²)` per coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianReportConfig {
    sigma: f64,
    sensitivity: f64,
}

impl GaussianReportConfig {
    /// Sensitivity 2, i.e. scores `S_i + N(0, σ²)`.
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_sensitivity(sigma, 2.0)
    }

    pub fn with_sensitivity(sigma: f64, sensitivity: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(AuditError::param("sigma", format!("must be positive, got {sigma}")));
        }
        if !(sensitivity > 0.0) || !sensitivity.is_finite() {
            return Err(AuditError::param(
                "sensitivity",
                format!("must be positive, got {sensitivity}"),
            ));
        }
        Ok(Self { sigma, sensitivity })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    /// zCDP parameter `Δ²/(2σ²)` of one release.
    pub fn rho(&self) -> f64 {
        self.sensitivity * self.sensitivity / (2.0 * self.sigma * self.sigma)
    }
}

pub fn gaussian_report<R: Rng + ?Sized>(
    s: &SelectionVector,
    cfg: &GaussianReportConfig,
    rng: &mut R,
) -> ScoreVector {
    let half = 0.5 * cfg.sensitivity;
    let y = s
        .as_slice()
        .iter()
        .map(|&x| {
            let z: f64 = rng.sample(StandardNormal);
            f64::from(x) * half + cfg.sigma * z
        })
        .collect();
    ScoreVector::new(y).expect("finite inputs give finite scores")
}

/// An `(ε, δ)`-DP mechanism that, with probability `β`, spends its `δ`
/// budget on boosting the accuracy of all `r` guesses at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathologicalConfig {
    m: u64,
    r: u64,
    eps: f64,
    delta: f64,
    beta: f64,
}

impl PathologicalConfig {
    pub fn new(m: u64, r: u64, eps: f64, delta: f64, beta: f64) -> Result<Self> {
        if r == 0 || r > m {
            return Err(AuditError::param("r", format!("must be in 1..={m}, got {r}")));
        }
        if !(eps >= 0.0) {
            return Err(AuditError::param("eps", format!("must be >= 0, got {eps}")));
        }
        if !(0.0..=1.0).contains(&delta) || !(0.0..=1.0).contains(&beta) {
            return Err(AuditError::param("delta", "delta and beta must lie in [0, 1]"));
        }
        let (budget, room) = (m as f64 * delta, r as f64 * beta);
        if !(budget > 0.0 && budget <= room) {
            return Err(AuditError::param(
                "delta",
                format!("need 0 < m*delta <= r*beta, got m*delta={budget}, r*beta={room}"),
            ));
        }
        Ok(Self { m, r, eps, delta, beta })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Per-guess accuracy when `X = 0`.
    pub fn base_accuracy(&self) -> f64 {
        Bernoulli::rr_accuracy(self.eps).p()
    }

    /// Per-guess accuracy when `X = 1`: `a + (1 - a)·e^ε/(e^ε+1)` with `a = mδ/(rβ)`.
    pub fn boosted_accuracy(&self) -> f64 {
        let a = self.m as f64 * self.delta / (self.r as f64 * self.beta);
        if a >= 1.0 {
            return 1.0;
        }
        a + (1.0 - a) * self.base_accuracy()
    }
}

/// One draw of the pathological mechanism.
pub fn pathological<R: Rng + ?Sized>(
    s: &SelectionVector,
    cfg: &PathologicalConfig,
    rng: &mut R,
) -> Result<GuessVector> {
    let x = rng.random::<f64>() < cfg.beta;
    pathological_branch(s, cfg, x, rng)
}

/// The pathological mechanism with the coin `X` forced.
pub fn pathological_branch<R: Rng + ?Sized>(
    s: &SelectionVector,
    cfg: &PathologicalConfig,
    x: bool,
    rng: &mut R,
) -> Result<GuessVector> {
    if s.len() as u64 != cfg.m {
        return Err(AuditError::LengthMismatch {
            left: "selection",
            left_len: s.len(),
            right: "config m",
            right_len: cfg.m as usize,
        });
    }
    let p = if x { cfg.boosted_accuracy() } else { cfg.base_accuracy() };
    let mut t = vec![0i8; s.len()];
    for i in index::sample(rng, s.len(), cfg.r as usize) {
        t[i] = flip(s.as_slice()[i], p, rng);
    }
    Ok(GuessVector::from_raw(t))
}
