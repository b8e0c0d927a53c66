use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{AuditError, Result};

/// A gradient-space canary: its gradient is `magnitude · e_index` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracCanary {
    pub index: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Example {
    /// Features and a label (`±1` for logistic, real for linear).
    Labeled { x: Vec<f64>, y: f64 },
    Dirac(DiracCanary),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    Logistic,
    Linear,
    /// Labeled examples contribute nothing; only Dirac canaries move `w`.
    CanaryOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gradient {
    Zero,
    Sparse { index: usize, value: f64 },
    Dense(Vec<f64>),
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        match self {
            Gradient::Zero => 0.0,
            Gradient::Sparse { value, .. } => value.abs(),
            Gradient::Dense(g) => g.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    /// Rescales to norm at most `c`.
    pub fn clipped(self, c: f64) -> Gradient {
        let n = self.norm();
        if n <= c {
            return self;
        }
        let scale = c / n;
        match self {
            Gradient::Zero => Gradient::Zero,
            Gradient::Sparse { index, value } => Gradient::Sparse {
                index,
                value: value * scale,
            },
            Gradient::Dense(mut g) => {
                g.iter_mut().for_each(|x| *x *= scale);
                Gradient::Dense(g)
            }
        }
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        match self {
            Gradient::Zero => 0.0,
            Gradient::Sparse { index, value } => value * w[*index],
            Gradient::Dense(g) => g.iter().zip(w).map(|(a, b)| a * b).sum(),
        }
    }

    /// `acc += self`.
    pub fn accumulate(&self, acc: &mut [f64]) {
        match self {
            Gradient::Zero => {}
            Gradient::Sparse { index, value } => acc[*index] += value,
            Gradient::Dense(g) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Gradient::Zero => true,
            Gradient::Sparse { value, .. } => value.is_finite(),
            Gradient::Dense(g) => g.iter().all(|x| x.is_finite()),
        }
    }
}

/// Per-example loss `f(w, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossModel {
    pub kind: LossKind,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ln(1 + e^z) without overflow
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LossModel {
    pub fn new(kind: LossKind) -> Self {
        Self { kind }
    }

    pub fn loss(&self, w: &[f64], ex: &Example) -> f64 {
        match ex {
            Example::Dirac(c) => c.magnitude * w[c.index],
            Example::Labeled { x, y } => match self.kind {
                LossKind::Logistic => softplus(-y * dot(w, x)),
                LossKind::Linear => 0.5 * (dot(w, x) - y).powi(2),
                LossKind::CanaryOnly => 0.0,
            },
        }
    }

    pub fn gradient(&self, w: &[f64], ex: &Example) -> Gradient {
        match ex {
            Example::Dirac(c) => Gradient::Sparse {
                index: c.index,
                value: c.magnitude,
            },
            Example::Labeled { x, y } => match self.kind {
                LossKind::Logistic => {
                    let coef = -y * sigmoid(-y * dot(w, x));
                    Gradient::Dense(x.iter().map(|xi| coef * xi).collect())
                }
                LossKind::Linear => {
                    let coef = dot(w, x) - y;
                    Gradient::Dense(x.iter().map(|xi| coef * xi).collect())
                }
                LossKind::CanaryOnly => Gradient::Zero,
            },
        }
    }
}

/// Parameters of a synthetic Gaussian-feature task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticData {
    pub dim: usize,
    pub count: usize,
    /// Logistic: probability of flipping each label. Linear: noise std.
    pub label_noise: f64,
}

/// Features `x ~ N(0, I/d)` with labels from a hidden `w* ~ N(0, I)`.
pub fn synthetic_dataset<R: Rng + ?Sized>(
    kind: LossKind,
    spec: &SyntheticData,
    w_star: &[f64],
    rng: &mut R,
) -> Result<Vec<Example>> {
    if w_star.len() != spec.dim {
        return Err(AuditError::LengthMismatch {
            left: "w_star",
            left_len: w_star.len(),
            right: "dim",
            right_len: spec.dim,
        });
    }
    if !(spec.label_noise >= 0.0) || (kind == LossKind::Logistic && spec.label_noise > 1.0) {
        return Err(AuditError::param(
            "label_noise",
            format!("out of range: {}", spec.label_noise),
        ));
    }
    let scale = 1.0 / (spec.dim as f64).sqrt();
    Ok((0..spec.count)
        .map(|_| {
            let x: Vec<f64> = (0..spec.dim)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let z = dot(w_star, &x);
            let y = match kind {
                LossKind::Linear => z + spec.label_noise * rng.sample::<f64, _>(StandardNormal),
                _ => {
                    let sign = if z >= 0.0 { 1.0 } else { -1.0 };
                    if rng.random::<f64>() < spec.label_noise {
                        -sign
                    } else {
                        sign
                    }
                }
            };
            Example::Labeled { x, y }
        })
        .collect())
}

/// `m` Dirac canaries on distinct uniformly chosen coordinates of `0..d`.
pub fn dirac_canaries<R: Rng + ?Sized>(m: usize, d: usize, c: f64, rng: &mut R) -> Result<Vec<DiracCanary>> {
    if m > d {
        return Err(AuditError::param("m", format!("{m} canaries need at least {m} coordinates, got {d}")));
    }
    if !(c > 0.0) {
        return Err(AuditError::param("c", format!("must be positive, got {c}")));
    }
    Ok(index::sample(rng, d, m)
        .into_iter()
        .map(|index| DiracCanary { index, magnitude: c })
        .collect())
}
