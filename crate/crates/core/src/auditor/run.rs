use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::guesses::{count_correct, make_guesses, sample_selection};
use super::vectors::{GuessVector, ScoreVector, SelectionVector};
use crate::bounds::{eps_lower_bound, p_value_audit, ConfidenceLevel, GuessSummary, PrivacyParams};
use crate::mechanisms::{
    gaussian_dp_eps, gaussian_report, pathological, randomized_response, GaussianReportConfig, PathologicalConfig,
    RRConfig,
};
use crate::{AuditError, Result};

/// What a mechanism hands back to the auditor.
#[derive(Debug, Clone, PartialEq)]
pub enum MechanismOutput {
    /// Scores to be thresholded into guesses.
    Scores(ScoreVector),
    /// Guesses produced directly, bypassing thresholding.
    Guesses(GuessVector),
}

/// A randomized algorithm under audit.
pub trait Mechanism {
    fn name(&self) -> String;

    /// `ε` such that the mechanism is `(ε, delta)`-DP, if known.
    fn declared_eps(&self, delta: f64) -> Option<f64>;

    fn run(&self, s: &SelectionVector, rng: &mut dyn RngCore) -> Result<MechanismOutput>;
}

impl Mechanism for RRConfig {
    fn name(&self) -> String {
        format!("randomized-response(eps={})", self.eps())
    }

    fn declared_eps(&self, _delta: f64) -> Option<f64> {
        Some(self.eps())
    }

    fn run(&self, s: &SelectionVector, rng: &mut dyn RngCore) -> Result<MechanismOutput> {
        Ok(MechanismOutput::Guesses(randomized_response(s, self, rng)))
    }
}

impl Mechanism for GaussianReportConfig {
    fn name(&self) -> String {
        format!("gaussian-report(sigma={}, sensitivity={})", self.sigma(), self.sensitivity())
    }

    fn declared_eps(&self, delta: f64) -> Option<f64> {
        gaussian_dp_eps(self.rho(), delta).ok()
    }

    fn run(&self, s: &SelectionVector, rng: &mut dyn RngCore) -> Result<MechanismOutput> {
        Ok(MechanismOutput::Scores(gaussian_report(s, self, rng)))
    }
}

impl Mechanism for PathologicalConfig {
    fn name(&self) -> String {
        format!(
            "pathological(m={}, r={}, eps={}, delta={}, beta={})",
            self.m(),
            self.r(),
            self.eps(),
            self.delta(),
            self.beta()
        )
    }

    fn declared_eps(&self, delta: f64) -> Option<f64> {
        (delta >= self.delta()).then_some(self.eps())
    }

    fn run(&self, s: &SelectionVector, rng: &mut dyn RngCore) -> Result<MechanismOutput> {
        Ok(MechanismOutput::Guesses(pathological(s, self, rng)?))
    }
}

/// Ignores its input and returns the same score everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantScores(pub f64);

impl Mechanism for ConstantScores {
    fn name(&self) -> String {
        format!("constant({})", self.0)
    }

    fn declared_eps(&self, _delta: f64) -> Option<f64> {
        Some(0.0)
    }

    fn run(&self, s: &SelectionVector, _rng: &mut dyn RngCore) -> Result<MechanismOutput> {
        Ok(MechanismOutput::Scores(ScoreVector::new(vec![self.0; s.len()])?))
    }
}

/// Parameters of one audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub m: usize,
    pub k_plus: usize,
    pub k_minus: usize,
    pub delta: f64,
    pub confidences: Vec<f64>,
    /// `ε` values at which to report p-values.
    pub eps_grid: Vec<f64>,
}

impl AuditConfig {
    pub fn new(m: usize, k_plus: usize, k_minus: usize, delta: f64) -> Self {
        Self {
            m,
            k_plus,
            k_minus,
            delta,
            confidences: vec![0.95],
            eps_grid: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        GuessSummary::new(self.m as u64, self.k_plus as u64, self.k_minus as u64, 0)?;
        PrivacyParams::new(0.0, self.delta)?;
        for &c in &self.confidences {
            ConfidenceLevel::from_confidence(c)?;
        }
        for &e in &self.eps_grid {
            PrivacyParams::new(e, self.delta)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBound {
    pub confidence: f64,
    pub eps_lb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValueAt {
    pub eps: f64,
    pub p_value: f64,
}

/// Everything needed to reproduce and interpret one audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub mechanism: String,
    pub config: AuditConfig,
    pub seed: u64,
    pub stream: u64,
    pub summary: GuessSummary,
    /// Sorted by increasing confidence.
    pub eps_lb: Vec<ConfidenceBound>,
    pub p_values: Vec<PValueAt>,
}

/// Random stream `stream` under `seed`; distinct streams are independent.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn audit_run(mechanism: &dyn Mechanism, config: &AuditConfig, seed: u64) -> Result<AuditReport> {
    audit_run_stream(mechanism, config, seed, 0)
}

/// Coins, one mechanism invocation, guesses, count, and `ε` lower bounds.
pub fn audit_run_stream(mechanism: &dyn Mechanism, config: &AuditConfig, seed: u64, stream: u64) -> Result<AuditReport> {
    config.validate()?;
    let mut rng = trial_rng(seed, stream);
    let s = sample_selection(config.m, &mut rng);
    let wrap = |e: AuditError| AuditError::Mechanism {
        mechanism: mechanism.name(),
        reason: e.to_string(),
    };
    let t = match mechanism.run(&s, &mut rng).map_err(wrap)? {
        MechanismOutput::Scores(y) => {
            if y.len() != config.m {
                return Err(wrap(AuditError::LengthMismatch {
                    left: "scores",
                    left_len: y.len(),
                    right: "selection",
                    right_len: config.m,
                }));
            }
            make_guesses(&y, config.k_plus, config.k_minus)?
        }
        MechanismOutput::Guesses(t) => t,
    };
    let v = count_correct(&s, &t).map_err(wrap)?;
    let summary = GuessSummary::new(config.m as u64, t.k_plus() as u64, t.k_minus() as u64, v)?;

    let mut confidences = config.confidences.clone();
    confidences.sort_by(f64::total_cmp);
    let eps_lb = confidences
        .into_iter()
        .map(|confidence| {
            let level = ConfidenceLevel::from_confidence(confidence)?;
            let eps_lb = eps_lower_bound(summary.m(), summary.r(), summary.v(), config.delta, level)?;
            Ok(ConfidenceBound { confidence, eps_lb })
        })
        .collect::<Result<Vec<_>>>()?;
    let p_values = config
        .eps_grid
        .iter()
        .map(|&eps| {
            let params = PrivacyParams::new(eps, config.delta)?;
            Ok(PValueAt {
                eps,
                p_value: p_value_audit(&summary, &params),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditReport {
        mechanism: mechanism.name(),
        config: config.clone(),
        seed,
        stream,
        summary,
        eps_lb,
        p_values,
    })
}
