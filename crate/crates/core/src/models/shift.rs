//! Additive translation that moves a rate sample to strictly positive values.

use serde::{Deserialize, Serialize};

use crate::distributions::quantile_sorted;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// `r + α`, α the 99th percentile.
    AddP99,
    /// `r − α`, α the (negative) 1st percentile.
    SubtractP1,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub alpha: f64,
    pub mode: ShiftMode,
}

impl ShiftSpec {
    pub const NONE: ShiftSpec = ShiftSpec {
        alpha: 0.0,
        mode: ShiftMode::None,
    };

    pub fn apply(&self, r: f64) -> f64 {
        match self.mode {
            ShiftMode::AddP99 => r + self.alpha,
            ShiftMode::SubtractP1 => r - self.alpha,
            ShiftMode::None => r,
        }
    }

    pub fn unapply(&self, r: f64) -> f64 {
        match self.mode {
            ShiftMode::AddP99 => r - self.alpha,
            ShiftMode::SubtractP1 => r + self.alpha,
            ShiftMode::None => r,
        }
    }

    /// Signed offset added by [`ShiftSpec::apply`].
    pub fn offset(&self) -> f64 {
        self.apply(0.0)
    }
}

pub fn apply_shift(sample: &[f64], spec: &ShiftSpec) -> Vec<f64> {
    sample.iter().map(|r| spec.apply(*r)).collect()
}

pub fn unapply_shift(value: f64, spec: &ShiftSpec) -> f64 {
    spec.unapply(value)
}

/// Weibull-position percentile (rank `q(n+1)`), extrapolated linearly from
/// the two extreme order statistics outside `[1, n]`.
fn weibull_percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n + 1) as f64 - 1.0;
    if pos < 0.0 {
        return sorted[0] + pos * (sorted[1] - sorted[0]);
    }
    if pos > (n - 1) as f64 {
        return sorted[n - 1] + (pos - (n - 1) as f64) * (sorted[n - 1] - sorted[n - 2]);
    }
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Chooses the positivity shift for a sample.
///
/// All-positive samples are left alone. Otherwise α is the 99th percentile
/// (linear interpolation) added to every value. If that leaves the minimum
/// non-positive, α becomes the 1st percentile and is subtracted; this
/// percentile uses Weibull plotting positions so that, for samples of fewer
/// than 99 points, it lies below the sample minimum.
pub fn make_shift(sample: &[f64]) -> Result<ShiftSpec> {
    if sample.is_empty() {
        return Err(Error::Shift("empty sample".into()));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::Shift("sample contains non-finite values".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    if min > 0.0 {
        return Ok(ShiftSpec::NONE);
    }
    let p99 = quantile_sorted(&sorted, 0.99);
    if min + p99 > 0.0 {
        return Ok(ShiftSpec {
            alpha: p99,
            mode: ShiftMode::AddP99,
        });
    }
    let p1 = weibull_percentile(&sorted, 0.01);
    if min - p1 > 0.0 {
        return Ok(ShiftSpec {
            alpha: p1,
            mode: ShiftMode::SubtractP1,
        });
    }
    Err(Error::Shift(format!(
        "neither +p99 ({p99}) nor -p1 ({p1}) makes the minimum {min} positive"
    )))
}
