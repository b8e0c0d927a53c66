use crate::numeric::CompensatedSum;

/// An integer-valued distribution whose survival function upper-bounds the
/// correct-guess count under the null.
///
/// Survival is `Pr[W >= w]`: exactly 1 for `w <= 0` and 0 above
/// [`support_max`](Self::support_max).
pub trait DominatingDistribution {
    fn support_max(&self) -> i64;

    fn survival(&self, w: i64) -> f64;

    fn pmf(&self, w: i64) -> f64 {
        (self.survival(w) - self.survival(w + 1)).max(0.0)
    }
}

impl<D: DominatingDistribution + ?Sized> DominatingDistribution for &D {
    fn support_max(&self) -> i64 {
        (**self).support_max()
    }
    fn survival(&self, w: i64) -> f64 {
        (**self).survival(w)
    }
    fn pmf(&self, w: i64) -> f64 {
        (**self).pmf(w)
    }
}

/// A distribution on `0..=pmf.len()-1` given by its probability mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDistribution {
    pmf: Vec<f64>,
    // tail[k] = Pr[W >= k], with tail[len] = 0
    tail: Vec<f64>,
}

impl TabulatedDistribution {
    pub fn from_pmf(pmf: Vec<f64>) -> Self {
        let mut tail = vec![0.0; pmf.len() + 1];
        let mut acc = CompensatedSum::default();
        for k in (0..pmf.len()).rev() {
            acc.add(pmf[k]);
            tail[k] = acc.value().clamp(0.0, 1.0);
        }
        Self { pmf, tail }
    }

    pub fn masses(&self) -> &[f64] {
        &self.pmf
    }
}

impl DominatingDistribution for TabulatedDistribution {
    fn support_max(&self) -> i64 {
        self.pmf.len() as i64 - 1
    }

    fn survival(&self, w: i64) -> f64 {
        if w <= 0 {
            1.0
        } else if w as usize >= self.tail.len() {
            0.0
        } else {
            self.tail[w as usize]
        }
    }

    fn pmf(&self, w: i64) -> f64 {
        if w < 0 {
            0.0
        } else {
            self.pmf.get(w as usize).copied().unwrap_or(0.0)
        }
    }
}

/// Exact convolution of two pmfs on `0..`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![CompensatedSum::default(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j].add(x * y);
        }
    }
    out.into_iter().map(|s| s.value()).collect()
}

/// Slope of the dual LP solution for the `δ` correction:
///
/// `max(0, max_{1 <= i <= m} (Pr[W >= v-i] - Pr[W >= v]) / i)`.
///
/// The numerator is accumulated as a running sum of pmf terms below `v`. The
/// loop stops early once no later `i` can improve the maximum, since every
/// numerator is at most `Pr[W < v]`.
pub fn dual_alpha<D: DominatingDistribution + ?Sized>(dist: &D, v: i64, m: u64) -> f64 {
    let below = 1.0 - dist.survival(v);
    if below <= 0.0 {
        return 0.0;
    }
    let upper = below * (1.0 + 1e-9);
    let limit = (m as i64).min(v.max(0));
    let mut sum = CompensatedSum::default();
    let mut alpha = 0.0f64;
    for i in 1..=limit {
        sum.add(dist.pmf(v - i));
        let s = sum.value();
        let fi = i as f64;
        if s > fi * alpha {
            alpha = s / fi;
        }
        if upper / (fi + 1.0) <= alpha {
            break;
        }
    }
    alpha
}
