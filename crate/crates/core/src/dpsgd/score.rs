use super::config::TrainerConfig;
use super::model::{Example, Gradient, LossModel};
use super::train::ModelTrace;
use crate::mechanisms::{dpsgd_rdp_eps, gaussian_dp_eps};
use crate::{AuditError, Result};

/// `Σ_t ⟨w^{t-1} - w^t, ĝ^t⟩` where `ĝ^t` is the canary's gradient at
/// `w^{t-1}`, clipped to `cfg.clip`.
pub fn whitebox_score(canary: &Example, trace: &ModelTrace, cfg: &TrainerConfig, loss: &LossModel) -> f64 {
    (1..=trace.ell())
        .map(|t| {
            let (prev, next) = (trace.iterate(t - 1), trace.iterate(t));
            match loss.gradient(prev, canary).clipped(cfg.clip) {
                Gradient::Zero => 0.0,
                Gradient::Sparse { index, value } => value * (prev[index] - next[index]),
                Gradient::Dense(g) => g.iter().zip(prev.iter().zip(next)).map(|(gi, (a, b))| gi * (a - b)).sum(),
            }
        })
        .sum()
}

/// Loss reduction `f(w⁰, x) - f(w_final, x)`.
pub fn blackbox_score(example: &Example, w0: &[f64], w_final: &[f64], loss: &LossModel) -> f64 {
    loss.loss(w0, example) - loss.loss(w_final, example)
}

/// Upper bound on `ε` at `delta`.
///
/// Full batches (`q = 1`) compose `ℓ` Gaussian mechanisms into `ρ = ℓ/(2σ²)`
/// and read `ε` off the exact Gaussian curve. Otherwise the order-2 RDP bound
/// is converted with `ε̌ + ln(1/δ)`. Noiseless training is unbounded.
pub fn theoretical_eps_upper(cfg: &TrainerConfig, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AuditError::param("delta", format!("must be in (0, 1), got {delta}")));
    }
    if cfg.sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    if cfg.q >= 1.0 {
        let rho = cfg.ell as f64 / (2.0 * cfg.sigma * cfg.sigma);
        gaussian_dp_eps(rho, delta)
    } else {
        Ok(dpsgd_rdp_eps(cfg.ell as u64, cfg.q, cfg.sigma)? + (1.0 / delta).ln())
    }
}
