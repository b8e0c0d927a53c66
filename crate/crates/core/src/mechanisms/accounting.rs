use serde::{Deserialize, Serialize};

use super::normal::normal_sf;
use crate::{AuditError, Result};

/// `ρ`-zCDP guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZcdpParams {
    rho: f64,
}

impl ZcdpParams {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(AuditError::param("rho", format!("must be finite and >= 0, got {rho}")));
        }
        Ok(Self { rho })
    }

    /// Gaussian mechanism with L2 sensitivity `sensitivity` and noise `N(0, sigma²)`:
    /// `ρ = Δ²/(2σ²)`.
    pub fn gaussian(sensitivity: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(AuditError::param("sigma", format!("must be positive, got {sigma}")));
        }
        Self::new(sensitivity * sensitivity / (2.0 * sigma * sigma))
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `k`-fold composition.
    pub fn compose(&self, k: u64) -> Self {
        Self {
            rho: self.rho * k as f64,
        }
    }

    pub fn delta_at(&self, eps: f64) -> Result<f64> {
        gaussian_dp_delta(self.rho, eps)
    }

    pub fn eps_at(&self, delta: f64) -> Result<f64> {
        gaussian_dp_eps(self.rho, delta)
    }
}

/// `(α, ε̌)`-RDP guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdpParams {
    order: f64,
    eps_check: f64,
}

impl RdpParams {
    pub fn new(order: f64, eps_check: f64) -> Result<Self> {
        if !(order > 1.0) {
            return Err(AuditError::param("order", format!("must exceed 1, got {order}")));
        }
        if !(eps_check >= 0.0) {
            return Err(AuditError::param("eps_check", format!("must be >= 0, got {eps_check}")));
        }
        Ok(Self { order, eps_check })
    }

    /// Order-2 guarantee of `ell` steps of subsampled Gaussian noise.
    pub fn dpsgd(ell: u64, q: f64, sigma: f64) -> Result<Self> {
        Self::new(2.0, dpsgd_rdp_eps(ell, q, sigma)?)
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn eps_check(&self) -> f64 {
        self.eps_check
    }

    /// `ε̌ + ln(1/δ)/(α - 1)`.
    pub fn to_dp_eps(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(AuditError::param("delta", format!("must be in (0, 1), got {delta}")));
        }
        Ok(self.eps_check + (1.0 / delta).ln() / (self.order - 1.0))
    }

    /// Best balanced membership-inference accuracy; only meaningful at order 2.
    pub fn membership_accuracy(&self) -> Result<f64> {
        rdp_membership_accuracy(self.eps_check)
    }
}

/// Exact privacy curve of the Gaussian mechanism with `ρ = Δ²/(2σ²)`:
/// `δ(ε) = Φ̄((ε-ρ)/√(2ρ)) - e^ε Φ̄((ε+ρ)/√(2ρ))`.
pub fn gaussian_dp_delta(rho: f64, eps: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(AuditError::param("rho", format!("must be positive, got {rho}")));
    }
    if !(eps >= 0.0) {
        return Err(AuditError::param("eps", format!("must be >= 0, got {eps}")));
    }
    let s = (2.0 * rho).sqrt();
    let head = normal_sf((eps - rho) / s);
    let tail = normal_sf((eps + rho) / s);
    // keep e^ε from overflowing when the tail has already underflowed
    let weighted = if tail == 0.0 { 0.0 } else { (eps + tail.ln()).exp() };
    Ok((head - weighted).clamp(0.0, 1.0))
}

/// Smallest `ε` with `gaussian_dp_delta(rho, ε) <= delta`, to within 1e-9.
/// Returns 0 when `delta` already covers `ε = 0`.
pub fn gaussian_dp_eps(rho: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AuditError::param("delta", format!("must be in (0, 1), got {delta}")));
    }
    if gaussian_dp_delta(rho, 0.0)? <= delta {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while gaussian_dp_delta(rho, hi)? > delta {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(AuditError::param("delta", "too small for the requested rho"));
        }
    }
    while hi - lo > 1e-9 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if gaussian_dp_delta(rho, mid)? > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Order-2 RDP of `ell` DP-SGD steps: `ε̌ = ℓ ln(1 + q²(e^{1/σ²} - 1))`.
/// `q = 0` is accepted and gives 0.
pub fn dpsgd_rdp_eps(ell: u64, q: f64, sigma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(AuditError::param("q", format!("must be in [0, 1], got {q}")));
    }
    if !(sigma > 0.0) {
        return Err(AuditError::param("sigma", format!("must be positive, got {sigma}")));
    }
    Ok(ell as f64 * (q * q * (1.0 / (sigma * sigma)).exp_m1()).ln_1p())
}

/// Maximum balanced membership-inference accuracy under `(2, ε̌)`-RDP:
/// `1/2 + 1/2 √((e^ε̌ - 1)/(e^ε̌ + 3))`.
pub fn rdp_membership_accuracy(eps_check: f64) -> Result<f64> {
    if !(eps_check >= 0.0) {
        return Err(AuditError::param("eps_check", format!("must be >= 0, got {eps_check}")));
    }
    let e = eps_check.exp_m1();
    let ratio = if e.is_infinite() { 1.0 } else { e / (e + 4.0) };
    Ok(0.5 + 0.5 * ratio.sqrt())
}

/// Idealized outcome of guessing on Gaussian-noised `±1` scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianExpectation {
    /// Score threshold `c` with `Pr[S + ξ > c] = r/(2m)`.
    pub threshold: f64,
    /// `Pr[S = +1 | S + ξ > c]`.
    pub accuracy: f64,
    /// `⌈r · accuracy⌉`.
    pub v: u64,
}

/// Expected number of correct guesses when guessing on the top and bottom
/// `r/2` of `m` scores `S_i + N(0, σ²)`.
pub fn expected_correct_gaussian(m: u64, r: u64, sigma: f64) -> Result<GaussianExpectation> {
    if r == 0 || r > m {
        return Err(AuditError::param("r", format!("must be in 1..={m}, got {r}")));
    }
    if !(sigma > 0.0) {
        return Err(AuditError::param("sigma", format!("must be positive, got {sigma}")));
    }
    let target = r as f64 / (2.0 * m as f64);
    let tail = |c: f64| 0.5 * normal_sf((c - 1.0) / sigma) + 0.5 * normal_sf((c + 1.0) / sigma);
    let (mut lo, mut hi) = (-1.0 - 40.0 * sigma, 1.0 + 40.0 * sigma);
    let mut c = 0.5 * (lo + hi);
    for _ in 0..200 {
        c = 0.5 * (lo + hi);
        let f = tail(c);
        if (f - target).abs() <= 1e-12 * target.max(1e-300) {
            break;
        }
        if f > target {
            lo = c;
        } else {
            hi = c;
        }
    }
    let a = normal_sf((c - 1.0) / sigma);
    let b = normal_sf((c + 1.0) / sigma);
    let accuracy = if a + b > 0.0 { a / (a + b) } else { 1.0 };
    let v = ((r as f64 * accuracy).ceil() as u64).min(r);
    Ok(GaussianExpectation {
        threshold: c,
        accuracy,
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_delta_examples() {
        let d = gaussian_dp_delta(0.5, 4.38).unwrap();
        assert!((d / 1e-5 - 1.0).abs() < 0.05, "{d}");
        let d = gaussian_dp_delta(0.5, 2.675).unwrap();
        assert!((d - 0.0039334).abs() < 5e-5, "{d}");
        let d0 = gaussian_dp_delta(0.5, 0.0).unwrap();
        assert!((d0 - (normal_sf(-0.5) - normal_sf(0.5))).abs() < 1e-15);
        assert!((d0 - 0.38292).abs() < 1e-5);
        assert!(gaussian_dp_delta(0.0, 1.0).is_err());
        assert_eq!(gaussian_dp_delta(0.5, 700.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_eps_examples() {
        assert!((gaussian_dp_eps(0.5, 1e-5).unwrap() - 4.38).abs() < 0.005);
        assert!((gaussian_dp_eps(0.5, 0.0039334).unwrap() - 2.675).abs() < 0.005);
        assert_eq!(gaussian_dp_eps(0.5, 0.5).unwrap(), 0.0);
        assert!(gaussian_dp_eps(0.5, 0.0).is_err());
    }

    #[test]
    fn rdp_examples() {
        assert_eq!(dpsgd_rdp_eps(5, 0.0, 1.0).unwrap(), 0.0);
        assert!((dpsgd_rdp_eps(1, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let v = dpsgd_rdp_eps(1000, 1e-3, 1.0).unwrap();
        let oracle = 1000.0 * (1e-6 * (std::f64::consts::E - 1.0)).ln_1p();
        assert!((v - oracle).abs() < 1e-18);
        assert!((v - 1.7182e-3).abs() < 1e-7);
        assert!(dpsgd_rdp_eps(1, 1.5, 1.0).is_err());
    }

    #[test]
    fn membership_accuracy_examples() {
        assert_eq!(rdp_membership_accuracy(0.0).unwrap(), 0.5);
        let a = rdp_membership_accuracy(5f64.ln()).unwrap();
        assert!((a - (0.5 + 0.5 * 0.5f64.sqrt())).abs() < 1e-15);
        for e in [1e-4, 1e-3, 0.01, 0.05] {
            let a = rdp_membership_accuracy(e).unwrap() - 0.5;
            let approx = e.sqrt() / 4.0;
            assert!((a / approx - 1.0).abs() < 0.05, "{e}");
        }
        assert!(rdp_membership_accuracy(1e4).unwrap() <= 1.0);
    }

    #[test]
    fn rdp_conversion() {
        let p = RdpParams::dpsgd(0, 0.5, 1.0).unwrap();
        assert!((p.to_dp_eps(1e-5).unwrap() - 1e5f64.ln()).abs() < 1e-12);
        assert!(RdpParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn zcdp_gaussian() {
        let z = ZcdpParams::gaussian(2.0, 2.0).unwrap();
        assert_eq!(z.rho(), 0.5);
        assert_eq!(ZcdpParams::gaussian(1.0, 10.0).unwrap().compose(100).rho(), 0.5);
    }

    #[test]
    fn expected_correct_examples() {
        let full = expected_correct_gaussian(1000, 1000, 2.0).unwrap();
        assert!(full.threshold.abs() < 1e-9);
        assert!((full.accuracy - normal_sf(-0.5)).abs() < 1e-9);
        assert_eq!(full.v, (normal_sf(-0.5) * 1000.0).ceil() as u64);
        let sharp = expected_correct_gaussian(1000, 100, 1e-3).unwrap();
        assert_eq!(sharp.v, 100);
        let anchor = expected_correct_gaussian(100_000, 1510, 2.0).unwrap();
        assert_eq!(anchor.v, 1439);
        assert!(expected_correct_gaussian(10, 11, 1.0).is_err());
    }
}
