use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{AuditError, Result};

/// Initial iterate `w⁰`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Init {
    Zero,
    /// `N(0, scale²)` per coordinate from a dedicated stream.
    Gaussian { scale: f64, seed: u64 },
}

/// DP-SGD hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    /// Number of steps `ℓ`.
    pub ell: usize,
    /// Clipping norm `c`.
    pub clip: f64,
    /// Noise multiplier `σ`; the noise std is `σc`. Zero gives plain clipped GD.
    pub sigma: f64,
    /// Poisson sampling probability per element per step.
    pub q: f64,
    pub learning_rate: f64,
    pub dim: usize,
    pub init: Init,
}

impl TrainerConfig {
    pub fn new(ell: usize, clip: f64, sigma: f64, q: f64, learning_rate: f64, dim: usize) -> Result<Self> {
        let cfg = Self {
            ell,
            clip,
            sigma,
            q,
            learning_rate,
            dim,
            init: Init::Zero,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell == 0 {
            return Err(AuditError::param("ell", "must be at least 1"));
        }
        if !(self.clip > 0.0) || !self.clip.is_finite() {
            return Err(AuditError::param("clip", format!("must be positive, got {}", self.clip)));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(AuditError::param("sigma", format!("must be >= 0, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(AuditError::param("q", format!("must be in [0, 1], got {}", self.q)));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(AuditError::param(
                "learning_rate",
                format!("must be positive, got {}", self.learning_rate),
            ));
        }
        if self.dim == 0 {
            return Err(AuditError::param("dim", "must be at least 1"));
        }
        if let Init::Gaussian { scale, .. } = self.init {
            if !(scale >= 0.0) || !scale.is_finite() {
                return Err(AuditError::param("init scale", format!("must be >= 0, got {scale}")));
            }
        }
        Ok(())
    }

    /// SHA-256 over the exact bit patterns of every field.
    pub fn hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update((self.ell as u64).to_le_bytes());
        h.update(self.clip.to_bits().to_le_bytes());
        h.update(self.sigma.to_bits().to_le_bytes());
        h.update(self.q.to_bits().to_le_bytes());
        h.update(self.learning_rate.to_bits().to_le_bytes());
        h.update((self.dim as u64).to_le_bytes());
        match self.init {
            Init::Zero => h.update([0u8]),
            Init::Gaussian { scale, seed } => {
                h.update([1u8]);
                h.update(scale.to_bits().to_le_bytes());
                h.update(seed.to_le_bytes());
            }
        }
        h.finalize().into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(TrainerConfig::new(10, 1.0, 1.0, 1.0, 0.1, 5).is_ok());
        assert!(TrainerConfig::new(0, 1.0, 1.0, 1.0, 0.1, 5).is_err());
        assert!(TrainerConfig::new(10, 0.0, 1.0, 1.0, 0.1, 5).is_err());
        assert!(TrainerConfig::new(10, 1.0, -1.0, 1.0, 0.1, 5).is_err());
        assert!(TrainerConfig::new(10, 1.0, 1.0, 1.1, 0.1, 5).is_err());
        assert!(TrainerConfig::new(10, 1.0, 1.0, 1.0, 0.0, 5).is_err());
    }

    #[test]
    fn hash_sensitive_to_fields() {
        let a = TrainerConfig::new(10, 1.0, 1.0, 1.0, 0.1, 5).unwrap();
        let mut b = a;
        b.sigma = 1.0 + f64::EPSILON;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), a.hash());
        assert_ne!(a.hash(), a.with_init(Init::Gaussian { scale: 0.0, seed: 0 }).hash());
    }
}
