//! Scaled non-central chi-square: `X = c·Y`, `Y ~ χ'²(k, λ)`.

use rand_distr::{ChiSquared, Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{checked_gamma_lr, ln_gamma};

use crate::error::{domain, Error, Result};
use crate::rng;

/// Residual Poisson mass at which the mixture series stops.
pub const SERIES_TOLERANCE: f64 = 1e-12;
/// Maximum number of mixture terms evaluated.
pub const SERIES_MAX_TERMS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoncentralChiSquareParams {
    pub df: f64,
    pub noncentrality: f64,
    pub scale: f64,
}

impl NoncentralChiSquareParams {
    pub fn new(df: f64, noncentrality: f64, scale: f64) -> Result<Self> {
        let p = Self {
            df,
            noncentrality,
            scale,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.df > 0.0 && self.df.is_finite()) {
            return Err(domain(format!("df must be positive, got {}", self.df)));
        }
        if !(self.noncentrality >= 0.0 && self.noncentrality.is_finite()) {
            return Err(domain(format!(
                "noncentrality must be non-negative, got {}",
                self.noncentrality
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(domain(format!("scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.scale * (self.df + self.noncentrality)
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.scale.powi(2) * (self.df + 2.0 * self.noncentrality)
    }

    pub fn third_central_moment(&self) -> f64 {
        8.0 * self.scale.powi(3) * (self.df + 3.0 * self.noncentrality)
    }

    pub fn skewness(&self) -> f64 {
        let b = self.df + 2.0 * self.noncentrality;
        8f64.sqrt() * (self.df + 3.0 * self.noncentrality) / b.powf(1.5)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        ncx2_cdf(x, self)
    }

    /// One draw. For `df > 1` uses `(Z + √λ)² + χ²(df−1)`, otherwise the
    /// Poisson mixture `χ²(df + 2N)`, `N ~ Poisson(λ/2)`.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y = if self.df > 1.0 {
            let z: f64 = rng.sample(StandardNormal);
            let shifted = z + self.noncentrality.sqrt();
            let rest = ChiSquared::new(self.df - 1.0)
                .expect("df - 1 > 0")
                .sample(rng);
            shifted * shifted + rest
        } else {
            let extra = if self.noncentrality > 0.0 {
                Poisson::new(self.noncentrality / 2.0)
                    .expect("positive rate")
                    .sample(rng)
            } else {
                0.0
            };
            ChiSquared::new(self.df + 2.0 * extra)
                .expect("positive df")
                .sample(rng)
        };
        self.scale * y
    }
}

/// CDF of the scaled non-central chi-square, evaluated as the
/// Poisson(λ/2)-weighted sum of central chi-square CDFs.
///
/// Terms are accumulated outward from the Poisson mode using the
/// incomplete-gamma recurrences, until the covered Poisson mass is within
/// [`SERIES_TOLERANCE`] of one.
pub fn ncx2_cdf(x: f64, params: &NoncentralChiSquareParams) -> Result<f64> {
    params.validate()?;
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("ncx2 CDF requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let u = x / params.scale / 2.0;
    let a = params.df / 2.0;
    let mu = params.noncentrality / 2.0;
    let lower = |shape: f64| {
        checked_gamma_lr(shape, u).map_err(|e| Error::Numeric(format!("incomplete gamma: {e}")))
    };
    if mu == 0.0 {
        return lower(a).map(|p| p.clamp(0.0, 1.0));
    }

    let mode = mu.floor();
    let w_mode = (-mu + mode * mu.ln() - ln_gamma(mode + 1.0)).exp();
    let p_mode = lower(a + mode)?;
    // t_j = u^(a+j) e^(-u) / Γ(a+j+1), so that P(a+j+1) = P(a+j) - t_j
    let t_mode = ((a + mode) * u.ln() - u - ln_gamma(a + mode + 1.0)).exp();

    let mut sum = w_mode * p_mode;
    let mut mass = w_mode;
    let mut terms = 1usize;

    // upward: j = mode+1, mode+2, ...
    let (mut w_up, mut p_up, mut t_up, mut j_up) = (w_mode, p_mode, t_mode, mode);
    // downward: j = mode-1, ..., 0
    let (mut w_dn, mut p_dn, mut t_dn, mut j_dn) = (w_mode, p_mode, t_mode, mode);
    let mut down_open = mode > 0.0;

    while 1.0 - mass > SERIES_TOLERANCE {
        if terms >= SERIES_MAX_TERMS {
            return Err(Error::Numeric(format!(
                "ncx2 series did not converge within {SERIES_MAX_TERMS} terms (λ={})",
                params.noncentrality
            )));
        }
        // step whichever side currently carries the larger weight
        let go_down = down_open && w_dn >= w_up;
        if go_down {
            // t_{j-1} = t_j (a+j) / u ; P(a+j-1) = P(a+j) + t_{j-1}
            t_dn *= (a + j_dn) / u;
            p_dn += t_dn;
            w_dn *= j_dn / mu;
            j_dn -= 1.0;
            sum += w_dn * p_dn.min(1.0);
            mass += w_dn;
            down_open = j_dn > 0.0;
        } else {
            p_up -= t_up;
            j_up += 1.0;
            t_up *= u / (a + j_up);
            w_up *= mu / j_up;
            sum += w_up * p_up.max(0.0);
            mass += w_up;
            if w_up == 0.0 && !down_open {
                break;
            }
        }
        terms += 1;
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// `n` seeded draws.
pub fn sample_ncx2(params: &NoncentralChiSquareParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    if n == 0 {
        return Err(domain("sample size must be at least 1"));
    }
    let mut rng = rng::stream(seed, 0);
    Ok((0..n).map(|_| params.draw(&mut rng)).collect())
}

/// Fits `(df, λ, c)` by matching mean, variance and third central moment.
///
/// With `m`, `v`, `μ3` the sample moments the system has an admissible
/// solution iff `1.5 v²/m < μ3 ≤ 2 v²/m`; the scale is then the smaller
/// root of `8m c² − 8v c + μ3 = 0`. Outside that band the fit matches two
/// moments with `λ = 0`.
pub fn fit_ncx2(sample: &[f64]) -> Result<NoncentralChiSquareParams> {
    if sample.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 observations, got {}",
            sample.len()
        )));
    }
    if let Some(bad) = sample.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(domain(format!("ncx2 fit requires positive values, got {bad}")));
    }
    let n = sample.len() as f64;
    let m = sample.iter().sum::<f64>() / n;
    let (mut v, mut mu3) = (0.0, 0.0);
    for x in sample {
        let d = x - m;
        v += d * d;
        mu3 += d * d * d;
    }
    v /= n;
    mu3 /= n;
    if !(v > f64::EPSILON * m * m) {
        return Err(Error::Fit("sample has zero variance".into()));
    }

    let disc = v * v - m * mu3 / 2.0;
    if mu3 > 1.5 * v * v / m && disc >= 0.0 {
        let c = (v - disc.sqrt()) / (2.0 * m);
        let a = m / c;
        let b = v / (2.0 * c * c);
        let df = 2.0 * a - b;
        let nc = b - a;
        if df > 0.0 && nc >= 0.0 && df.is_finite() && nc.is_finite() {
            return NoncentralChiSquareParams::new(df, nc, c);
        }
    }
    NoncentralChiSquareParams::new(2.0 * m * m / v, 0.0, v / (2.0 * m))
}
