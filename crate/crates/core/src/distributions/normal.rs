use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{domain, Result};

/// CDF of `Normal(mean, sd)`.
pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(domain(format!("standard deviation must be positive, got {sd}")));
    }
    Ok(std_normal_cdf((x - mean) / sd))
}

/// Standard normal CDF.
#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal quantile.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}
