//! Error metrics and the EWMA baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `sqrt((1/n) Σ e²)`.
pub fn rmse(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::Domain("rmse of an empty residual set".into()));
    }
    let ss: f64 = residuals.iter().map(|e| e * e).sum();
    Ok((ss / residuals.len() as f64).sqrt())
}

/// `sqrt(Σ_k (n_k/n) Σ_h e_h²)` over residual groups.
///
/// The inner sum is not divided by `n_k`, so this is not the weighted mean
/// of the per-group RMSEs; see [`weighted_mean_rmse`] for that quantity.
pub fn total_rmse<G: AsRef<[f64]>>(groups: &[G], n: usize) -> Result<f64> {
    check_groups(groups, n)?;
    let total: f64 = groups
        .iter()
        .map(|g| {
            let g = g.as_ref();
            g.len() as f64 / n as f64 * g.iter().map(|e| e * e).sum::<f64>()
        })
        .sum();
    Ok(total.sqrt())
}

/// `Σ_k (n_k/n) ε_k`.
pub fn weighted_mean_rmse<G: AsRef<[f64]>>(groups: &[G], n: usize) -> Result<f64> {
    check_groups(groups, n)?;
    groups
        .iter()
        .map(|g| rmse(g.as_ref()).map(|e| g.as_ref().len() as f64 / n as f64 * e))
        .sum()
}

fn check_groups<G: AsRef<[f64]>>(groups: &[G], n: usize) -> Result<()> {
    if groups.is_empty() || groups.iter().any(|g| g.as_ref().is_empty()) {
        return Err(Error::Domain("total rmse needs non-empty residual groups".into()));
    }
    if n == 0 {
        return Err(Error::Domain("total rmse needs n > 0".into()));
    }
    Ok(())
}

pub const DEFAULT_EWMA_LAMBDA: f64 = 0.94;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwmaConfig {
    pub lambda: f64,
    pub window: usize,
}

impl EwmaConfig {
    pub fn new(lambda: f64, window: usize) -> Result<Self> {
        let c = Self { lambda, window };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Usage(format!("EWMA lambda must lie in (0, 1), got {}", self.lambda)));
        }
        if self.window < 2 {
            return Err(Error::Usage(format!("EWMA window must be at least 2, got {}", self.window)));
        }
        Ok(())
    }
}

/// Weighted mean with weights `λ^i`, `i = 0` the most recent value.
pub fn ewma_forecast(window: &[f64], config: &EwmaConfig) -> Result<f64> {
    config.validate()?;
    if window.is_empty() {
        return Err(Error::Domain("EWMA of an empty window".into()));
    }
    if window.len() != config.window {
        return Err(Error::Domain(format!(
            "EWMA window holds {} values, configured for {}",
            window.len(),
            config.window
        )));
    }
    let (mut num, mut den, mut w) = (0.0, 0.0, 1.0);
    for r in window.iter().rev() {
        num += w * r;
        den += w;
        w *= config.lambda;
    }
    Ok(num / den)
}
