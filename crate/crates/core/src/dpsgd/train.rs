use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::{Init, TrainerConfig};
use super::model::{Example, LossModel};
use crate::auditor::SelectionVector;
use crate::{AuditError, Result};

/// Iterates `w⁰, …, w^ℓ`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTrace {
    dim: usize,
    values: Vec<f64>,
}

impl ModelTrace {
    /// `values` holds `ℓ + 1` rows of `dim` entries each.
    pub fn from_flat(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(AuditError::TraceFormat(format!(
                "{} values do not form rows of length {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AuditError::TraceFormat("non-finite iterate".into()));
        }
        Ok(Self { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of steps `ℓ`.
    pub fn ell(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    pub fn iterate(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn initial(&self) -> &[f64] {
        self.iterate(0)
    }

    pub fn last(&self) -> &[f64] {
        self.iterate(self.ell())
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }
}

fn initial_weights(cfg: &TrainerConfig) -> Vec<f64> {
    match cfg.init {
        Init::Zero => vec![0.0; cfg.dim],
        Init::Gaussian { scale, seed } => {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            (0..cfg.dim)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
    }
}

fn check_example(ex: &Example, dim: usize) -> Result<()> {
    match ex {
        Example::Labeled { x, .. } if x.len() != dim => Err(AuditError::LengthMismatch {
            left: "features",
            left_len: x.len(),
            right: "model dim",
            right_len: dim,
        }),
        Example::Dirac(c) if c.index >= dim => Err(AuditError::param(
            "canary index",
            format!("{} out of range for dim {dim}", c.index),
        )),
        _ => Ok(()),
    }
}

/// Noisy clipped SGD with Poisson sampling. `data` is always in the input
/// pool; canary `i` joins it iff `selection[i] = +1`.
pub fn dpsgd_train<R: Rng + ?Sized>(
    data: &[Example],
    canaries: &[Example],
    selection: &SelectionVector,
    cfg: &TrainerConfig,
    loss: &LossModel,
    rng: &mut R,
) -> Result<ModelTrace> {
    cfg.validate()?;
    if canaries.len() != selection.len() {
        return Err(AuditError::LengthMismatch {
            left: "canaries",
            left_len: canaries.len(),
            right: "selection",
            right_len: selection.len(),
        });
    }
    for ex in data.iter().chain(canaries) {
        check_example(ex, cfg.dim)?;
    }
    let pool: Vec<&Example> = data
        .iter()
        .chain(canaries.iter().enumerate().filter(|(i, _)| selection.is_included(*i)).map(|(_, ex)| ex))
        .collect();

    let d = cfg.dim;
    let noise_std = cfg.sigma * cfg.clip;
    let mut values = Vec::with_capacity((cfg.ell + 1) * d);
    values.extend(initial_weights(cfg));
    let mut step = vec![0.0; d];
    for t in 1..=cfg.ell {
        step.iter_mut().for_each(|x| *x = 0.0);
        let w = &values[(t - 1) * d..t * d];
        for ex in &pool {
            if cfg.q < 1.0 && rng.random::<f64>() >= cfg.q {
                continue;
            }
            let g = loss.gradient(w, ex).clipped(cfg.clip);
            if !g.is_finite() {
                return Err(AuditError::Training {
                    step: t,
                    reason: "non-finite gradient".into(),
                });
            }
            debug_assert!(g.norm() <= cfg.clip * (1.0 + 1e-12));
            g.accumulate(&mut step);
        }
        if noise_std > 0.0 {
            for x in step.iter_mut() {
                *x += noise_std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let next: Vec<f64> = w
            .iter()
            .zip(&step)
            .map(|(wi, si)| wi - cfg.learning_rate * si)
            .collect();
        if next.iter().any(|x| !x.is_finite()) {
            return Err(AuditError::Training {
                step: t,
                reason: "non-finite iterate".into(),
            });
        }
        values.extend(next);
    }
    Ok(ModelTrace { dim: d, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpsgd::model::{DiracCanary, LossKind};

    #[test]
    fn canary_only_unrolls() {
        let cfg = TrainerConfig::new(3, 2.0, 0.0, 1.0, 0.5, 4).unwrap();
        let canaries = vec![
            Example::Dirac(DiracCanary { index: 1, magnitude: 2.0 }),
            Example::Dirac(DiracCanary { index: 3, magnitude: 2.0 }),
        ];
        let s = SelectionVector::new(vec![1, -1]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let trace = dpsgd_train(&[], &canaries, &s, &cfg, &LossModel::new(LossKind::CanaryOnly), &mut rng).unwrap();
        assert_eq!(trace.ell(), 3);
        assert_eq!(trace.last(), &[0.0, -3.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = TrainerConfig::new(1, 1.0, 1.0, 1.0, 0.1, 2).unwrap();
        let model = LossModel::new(LossKind::Logistic);
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let bad = vec![Example::Labeled { x: vec![1.0], y: 1.0 }];
        let s = SelectionVector::new(vec![]).unwrap();
        assert!(dpsgd_train(&bad, &[], &s, &cfg, &model, &mut rng).is_err());
        let far = vec![Example::Dirac(DiracCanary { index: 2, magnitude: 1.0 })];
        let s1 = SelectionVector::new(vec![1]).unwrap();
        assert!(dpsgd_train(&[], &far, &s1, &cfg, &model, &mut rng).is_err());
        assert!(dpsgd_train(&[], &far, &s, &cfg, &model, &mut rng).is_err());
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let cfg = TrainerConfig::new(5, 1.0, 0.0, 1.0, 0.1, 1).unwrap();
        let data = vec![Example::Labeled { x: vec![1e300], y: 0.0 }];
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let s = SelectionVector::new(vec![]).unwrap();
        let canaries = vec![];
        let lin = LossModel::new(LossKind::Linear);
        let err = dpsgd_train(
            &data,
            &canaries,
            &s,
            &cfg.with_init(Init::Gaussian { scale: 1.0, seed: 3 }),
            &lin,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, AuditError::Training { .. }), "{err:?}");
    }
}
