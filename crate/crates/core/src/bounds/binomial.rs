//! Binomial probabilities via Loader's saddle-point expansion.
//!
//! `ln pmf` is assembled from Stirling-series remainders and the deviance
//! term `bd0`, which keeps relative accuracy near 1e-15 for `n` in the
//! millions; a plain `lgamma` difference loses about `log10(n)` digits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::dominance::DominatingDistribution;
use crate::numeric::CompensatedSum;
use crate::{AuditError, Result};

/// A success probability kept together with its complement, so tails stay
/// accurate when `p` is within rounding of 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bernoulli {
    p: f64,
    q: f64,
}

impl Bernoulli {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(AuditError::param("p", format!("must be in [0, 1], got {p}")));
        }
        Ok(Self { p, q: 1.0 - p })
    }

    /// `e^ε/(e^ε+1)` and its complement `1/(e^ε+1)`, each computed directly.
    pub fn rr_accuracy(eps: f64) -> Self {
        Self {
            p: 1.0 / (1.0 + (-eps).exp()),
            q: 1.0 / (1.0 + eps.exp()),
        }
    }

    pub(crate) fn from_parts(p: f64, q: f64) -> Self {
        debug_assert!((p + q - 1.0).abs() < 1e-12);
        Self { p, q }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn complement(&self) -> f64 {
        self.q
    }
}

// ln(k!) - (k + 1/2) ln k + k - ln sqrt(2 pi), tabulated for small k.
const STIRLING_ERR: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_67,
    0.041_340_695_955_409_294_093_82,
    0.027_677_925_684_998_339_148_79,
    0.020_790_672_103_765_093_111_52,
    0.016_644_691_189_821_192_163_19,
    0.013_876_128_823_070_747_998_75,
    0.011_896_709_945_891_770_095_06,
    0.010_411_265_261_972_096_497_48,
    0.009_255_462_182_712_732_917_729,
    0.008_330_563_433_362_871_256_469,
    0.007_573_675_487_951_840_794_972,
    0.006_942_840_107_209_529_865_664,
    0.006_408_994_188_004_207_068_44,
    0.005_951_370_112_758_847_735_624,
    0.005_554_733_551_962_801_371_039,
];

fn stirling_err(k: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if k <= 15.0 {
        return STIRLING_ERR[k as usize];
    }
    let kk = k * k;
    if k > 500.0 {
        (S0 - S1 / kk) / k
    } else if k > 80.0 {
        (S0 - (S1 - S2 / kk) / kk) / k
    } else if k > 35.0 {
        (S0 - (S1 - (S2 - S3 / kk) / kk) / kk) / k
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / kk) / kk) / kk) / kk) / k
    }
}

/// Deviance `x ln(x/np) + np - x` without cancellation near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln Pr[Binomial(n, p) = k]`; `-inf` outside the support.
pub fn ln_binomial_pmf(n: u64, k: u64, b: Bernoulli) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let (p, q) = (b.p, b.q);
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if k == 0 {
        if n == 0 {
            return 0.0;
        }
        return if p < 0.1 {
            -bd0(nf, nf * q) - nf * p
        } else {
            nf * q.ln()
        };
    }
    if k == n {
        return if q < 0.1 {
            -bd0(nf, nf * p) - nf * q
        } else {
            nf * p.ln()
        };
    }
    let x = k as f64;
    let lc = stirling_err(nf)
        - stirling_err(x)
        - stirling_err(nf - x)
        - bd0(x, nf * p)
        - bd0(nf - x, nf * q);
    let lf = (2.0 * PI).ln() + x.ln() + (-x / nf).ln_1p();
    lc - 0.5 * lf
}

/// `Pr[Binomial(n, p) = k]`.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> Result<f64> {
    Ok(ln_binomial_pmf(n, k, Bernoulli::new(p)?).exp())
}

/// `Pr[Binomial(n, p) >= v]`.
pub fn binomial_sf(n: u64, p: f64, v: i64) -> Result<f64> {
    Ok(BinomialDistribution::new(n, Bernoulli::new(p)?).survival(v))
}

/// `Binomial(n, p)` as a dominating distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialDistribution {
    n: u64,
    b: Bernoulli,
}

impl BinomialDistribution {
    pub fn new(n: u64, b: Bernoulli) -> Self {
        Self { n, b }
    }

    /// The randomized-response null: `Binomial(r, e^ε/(e^ε+1))`.
    pub fn for_guesses(r: u64, eps: f64) -> Self {
        Self::new(r, Bernoulli::rr_accuracy(eps))
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn success(&self) -> Bernoulli {
        self.b
    }

    fn pmf_at(&self, k: u64) -> f64 {
        ln_binomial_pmf(self.n, k, self.b).exp()
    }

    /// Sum of pmf terms walking away from the mode, stopping once a term no
    /// longer changes the sum. Terms are monotone on either side of the mode.
    fn tail_sum(&self, ks: impl Iterator<Item = u64>) -> f64 {
        let mut sum = CompensatedSum::default();
        for k in ks {
            let t = self.pmf_at(k);
            sum.add(t);
            if t <= sum.value() * 1e-18 {
                break;
            }
        }
        sum.value()
    }
}

impl DominatingDistribution for BinomialDistribution {
    fn support_max(&self) -> i64 {
        self.n as i64
    }

    fn survival(&self, w: i64) -> f64 {
        if w <= 0 {
            return 1.0;
        }
        let v = w as u64;
        if v > self.n {
            return 0.0;
        }
        let mean = self.n as f64 * self.b.p;
        let value = if v as f64 > mean {
            self.tail_sum(v..=self.n)
        } else {
            1.0 - self.tail_sum((0..v).rev())
        };
        value.clamp(0.0, 1.0)
    }

    fn pmf(&self, w: i64) -> f64 {
        if w < 0 || w as u64 > self.n {
            0.0
        } else {
            self.pmf_at(w as u64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact pmf by products of small integers; fine for n <= 60.
    fn pmf_by_products(n: u64, k: u64, p: f64) -> f64 {
        let mut c = 1.0f64;
        for j in 0..k {
            c = c * (n - j) as f64 / (j + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    }

    #[test]
    fn sf_enumeration_examples() {
        assert!((binomial_sf(2, 0.5, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!((binomial_sf(3, 0.75, 2).unwrap() - 0.84375).abs() < 1e-15);
        assert_eq!(binomial_sf(17, 0.3, 0).unwrap(), 1.0);
        assert_eq!(binomial_sf(17, 0.3, -4).unwrap(), 1.0);
        assert_eq!(binomial_sf(17, 0.3, 18).unwrap(), 0.0);
    }

    #[test]
    fn invalid_probability_rejected() {
        assert!(binomial_sf(5, 1.5, 2).is_err());
        assert!(binomial_sf(5, -0.1, 2).is_err());
        assert!(binomial_sf(5, f64::NAN, 2).is_err());
    }

    #[test]
    fn degenerate_probabilities() {
        assert_eq!(binomial_sf(5, 0.0, 1).unwrap(), 0.0);
        assert_eq!(binomial_sf(5, 1.0, 5).unwrap(), 1.0);
        assert_eq!(binomial_pmf(0, 0, 0.4).unwrap(), 1.0);
    }

    #[test]
    fn stirling_table_matches_series_at_boundary() {
        // The series branch at 16 must agree with the tabulated trend.
        let s15 = stirling_err(15.0);
        let s16 = stirling_err(16.0);
        assert!(s16 < s15 && s16 > 0.005);
        assert!((stirling_err(16.0) - 0.005_207_655_919_609_640_440_718).abs() < 1e-14);
    }

    #[test]
    fn pmf_matches_products_small_n() {
        for n in [1u64, 2, 7, 20, 45, 60] {
            for &p in &[0.01, 0.25, 0.5, 0.75, 0.93] {
                for k in 0..=n {
                    let exact = pmf_by_products(n, k, p);
                    let got = binomial_pmf(n, k, p).unwrap();
                    let rel = ((got - exact) / exact).abs();
                    assert!(rel < 1e-13, "n={n} k={k} p={p}: {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn rr_accuracy_complements() {
        let b = Bernoulli::rr_accuracy(3.0f64.ln());
        assert!((b.p() - 0.75).abs() < 1e-15);
        assert!((b.complement() - 0.25).abs() < 1e-15);
        let big = Bernoulli::rr_accuracy(60.0);
        assert!(big.complement() > 0.0 && big.complement() < 1e-25);
    }
}
