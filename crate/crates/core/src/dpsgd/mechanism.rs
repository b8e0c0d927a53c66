use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::config::TrainerConfig;
use super::model::{Example, LossModel};
use super::score::{blackbox_score, theoretical_eps_upper, whitebox_score};
use super::train::dpsgd_train;
use crate::auditor::{Mechanism, MechanismOutput, ScoreVector, SelectionVector};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScoreKind {
    /// Uses every iterate.
    WhiteBox,
    /// Uses only the first and last iterate.
    BlackBox,
}

/// DP-SGD training followed by canary scoring, as an auditable mechanism.
#[derive(Debug, Clone)]
pub struct DpsgdMechanism {
    pub cfg: TrainerConfig,
    pub loss: LossModel,
    pub data: Vec<Example>,
    pub canaries: Vec<Example>,
    pub score: ScoreKind,
}

impl Mechanism for DpsgdMechanism {
    fn name(&self) -> String {
        format!(
            "dpsgd({:?}, {:?}, ell={}, sigma={}, q={}, c={})",
            self.loss.kind, self.score, self.cfg.ell, self.cfg.sigma, self.cfg.q, self.cfg.clip
        )
    }

    fn declared_eps(&self, delta: f64) -> Option<f64> {
        theoretical_eps_upper(&self.cfg, delta).ok()
    }

    fn run(&self, s: &SelectionVector, rng: &mut dyn RngCore) -> Result<MechanismOutput> {
        let trace = dpsgd_train(&self.data, &self.canaries, s, &self.cfg, &self.loss, rng)?;
        let y = self
            .canaries
            .iter()
            .map(|c| match self.score {
                ScoreKind::WhiteBox => whitebox_score(c, &trace, &self.cfg, &self.loss),
                ScoreKind::BlackBox => blackbox_score(c, trace.initial(), trace.last(), &self.loss),
            })
            .collect();
        Ok(MechanismOutput::Scores(ScoreVector::new(y)?))
    }
}
