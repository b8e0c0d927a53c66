use libm::erfc;

/// Upper tail `Pr[N(0,1) > z]`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Lower tail `Pr[N(0,1) <= z]`.
pub fn normal_cdf(z: f64) -> f64 {
    normal_sf(-z)
}
