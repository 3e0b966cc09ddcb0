//! Closed-form estimating-function estimators for Vasicek and CIR with a
//! unit observation interval.

use serde::{Deserialize, Serialize};

use super::shift::ShiftSpec;
use super::{ModelKind, ModelParams};
use crate::error::{domain, Result};

/// Denominators below this magnitude make an estimate invalid.
pub const DENOMINATOR_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: ModelParams,
    pub shift: ShiftSpec,
    pub n_used: usize,
    /// `e^{-κ̂}` was strictly positive and all estimates are finite with `σ̂² > 0`.
    pub valid: bool,
}

impl CalibrationResult {
    fn invalid(kind: ModelKind, n: usize, kappa: f64, theta: f64, sigma: f64) -> Self {
        Self {
            params: ModelParams {
                kind,
                kappa,
                theta,
                sigma,
            },
            shift: ShiftSpec::NONE,
            n_used: n,
            valid: false,
        }
    }

    fn checked(kind: ModelKind, n: usize, kappa: f64, theta: f64, sigma2: f64) -> Self {
        let valid = kappa.is_finite() && theta.is_finite() && sigma2.is_finite() && sigma2 > 0.0;
        Self {
            params: ModelParams {
                kind,
                kappa,
                theta,
                sigma: if sigma2 > 0.0 { sigma2.sqrt() } else { f64::NAN },
            },
            shift: ShiftSpec::NONE,
            n_used: n,
            valid,
        }
    }

    /// Placeholder for a sample the estimators could not be applied to.
    pub fn failed(kind: ModelKind, n: usize) -> Self {
        Self::invalid(kind, n, f64::NAN, f64::NAN, f64::NAN)
    }

    pub fn with_shift(mut self, shift: ShiftSpec) -> Self {
        self.shift = shift;
        self
    }
}

pub fn calibrate(kind: ModelKind, sample: &[f64]) -> Result<CalibrationResult> {
    match kind {
        ModelKind::Vasicek => calibrate_vasicek(sample),
        ModelKind::Cir => calibrate_cir(sample),
    }
}

fn check_len(sample: &[f64]) -> Result<()> {
    if sample.len() < 2 {
        return Err(domain(format!(
            "calibration needs at least 2 observations, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(domain("sample contains non-finite values"));
    }
    Ok(())
}

/// CIR estimators; every observation must be strictly positive.
pub fn calibrate_cir(sample: &[f64]) -> Result<CalibrationResult> {
    check_len(sample)?;
    if let Some(bad) = sample.iter().find(|r| **r <= 0.0) {
        return Err(domain(format!("CIR calibration requires positive rates, got {bad}")));
    }
    let n = sample.len();
    let m = (n - 1) as f64;
    let (mut s_ratio, mut s_next, mut s_inv_prev, mut s_prev) = (0.0, 0.0, 0.0, 0.0);
    for w in sample.windows(2) {
        let (prev, next) = (w[0], w[1]);
        s_ratio += next / prev;
        s_next += next;
        s_inv_prev += 1.0 / prev;
        s_prev += prev;
    }
    let num = m * s_ratio - s_next * s_inv_prev;
    let den = m * m - s_prev * s_inv_prev;
    if !(den.abs() > DENOMINATOR_GUARD * m * m) {
        return Ok(CalibrationResult::invalid(ModelKind::Cir, n, f64::NAN, f64::NAN, f64::NAN));
    }
    let decay = num / den;
    if !(decay > 0.0) {
        return Ok(CalibrationResult::invalid(ModelKind::Cir, n, f64::NAN, f64::NAN, f64::NAN));
    }
    let kappa = -decay.ln();
    let theta = s_next / m + decay / (m * (1.0 - decay)) * (sample[n - 1] - sample[0]);

    let (mut num2, mut den2) = (0.0, 0.0);
    for w in sample.windows(2) {
        let (prev, next) = (w[0], w[1]);
        let resid = next - prev * decay - theta * (1.0 - decay);
        num2 += resid * resid / prev;
        den2 += ((theta / 2.0 - prev) * decay * decay - (theta - prev) * decay + theta / 2.0) / prev;
    }
    den2 /= kappa;
    if !(den2.abs() >= DENOMINATOR_GUARD) {
        return Ok(CalibrationResult::invalid(ModelKind::Cir, n, kappa, theta, f64::NAN));
    }
    Ok(CalibrationResult::checked(ModelKind::Cir, n, kappa, theta, num2 / den2))
}

/// Vasicek estimators; negative rates are admissible.
///
/// The `e^{-κ̂}` ratio is evaluated in centred form, which is algebraically
/// the same expression and keeps θ̂ exactly shift-equivariant.
pub fn calibrate_vasicek(sample: &[f64]) -> Result<CalibrationResult> {
    check_len(sample)?;
    let n = sample.len();
    let m = (n - 1) as f64;
    let prev = &sample[..n - 1];
    let next = &sample[1..];
    let mean_prev = prev.iter().sum::<f64>() / m;
    let mean_next = next.iter().sum::<f64>() / m;
    let (mut cov, mut var) = (0.0, 0.0);
    for (x, y) in prev.iter().zip(next) {
        let dx = x - mean_prev;
        cov += dx * (y - mean_next);
        var += dx * dx;
    }
    let scale = prev.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    if !(var > DENOMINATOR_GUARD * scale * scale) {
        return Ok(CalibrationResult::invalid(ModelKind::Vasicek, n, f64::NAN, f64::NAN, f64::NAN));
    }
    let decay = cov / var;
    if !(decay > 0.0) {
        return Ok(CalibrationResult::invalid(ModelKind::Vasicek, n, f64::NAN, f64::NAN, f64::NAN));
    }
    let kappa = -decay.ln();
    let theta = (mean_next - decay * mean_prev) / (1.0 - decay);
    let mean_sq = prev
        .iter()
        .zip(next)
        .map(|(x, y)| (y - x * decay - theta * (1.0 - decay)).powi(2))
        .sum::<f64>()
        / m;
    let factor_den = 1.0 - decay * decay;
    if !(factor_den.abs() >= DENOMINATOR_GUARD) {
        return Ok(CalibrationResult::invalid(ModelKind::Vasicek, n, kappa, theta, f64::NAN));
    }
    let sigma2 = 2.0 * kappa / factor_den * mean_sq;
    Ok(CalibrationResult::checked(ModelKind::Vasicek, n, kappa, theta, sigma2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::simulate_exact;

    fn params(kind: ModelKind) -> ModelParams {
        ModelParams::new(kind, 0.05, 5.0, 0.1).unwrap()
    }

    #[test]
    fn constant_sample_is_invalid() {
        let r = calibrate_cir(&[2.5; 30]).unwrap();
        assert!(!r.valid);
        let r = calibrate_vasicek(&[2.5; 30]).unwrap();
        assert!(!r.valid);
    }

    #[test]
    fn cir_rejects_non_positive() {
        assert!(calibrate_cir(&[1.0, 0.0, 2.0]).is_err());
        assert!(calibrate_cir(&[1.0]).is_err());
    }

    #[test]
    fn vasicek_accepts_negative_rates() {
        let path = simulate_exact(&ModelParams::new(ModelKind::Vasicek, 0.1, -0.3, 0.05).unwrap(), -0.2, 300, 4).unwrap();
        assert!(path.iter().any(|r| *r < 0.0));
        let r = calibrate_vasicek(&path).unwrap();
        assert!(r.valid);
        assert!(r.params.kappa.is_finite() && r.params.theta.is_finite() && r.params.sigma.is_finite());
    }

    #[test]
    fn recovers_vasicek_parameters() {
        let truth = params(ModelKind::Vasicek);
        let path = simulate_exact(&truth, 5.0, 4999, 21).unwrap();
        let r = calibrate_vasicek(&path).unwrap();
        assert!(r.valid);
        assert!((r.params.theta / 5.0 - 1.0).abs() < 0.05, "{r:?}");
        assert!((r.params.sigma / 0.1 - 1.0).abs() < 0.05, "{r:?}");
        assert!((r.params.kappa / 0.05 - 1.0).abs() < 0.25, "{r:?}");
    }

    #[test]
    fn recovers_cir_parameters() {
        let truth = params(ModelKind::Cir);
        let path = simulate_exact(&truth, 5.0, 4999, 22).unwrap();
        let r = calibrate_cir(&path).unwrap();
        assert!(r.valid);
        assert!((r.params.theta / 5.0 - 1.0).abs() < 0.05, "{r:?}");
        assert!((r.params.sigma / 0.1 - 1.0).abs() < 0.05, "{r:?}");
        assert!((r.params.kappa / 0.05 - 1.0).abs() < 0.25, "{r:?}");
    }

    #[test]
    fn vasicek_is_shift_equivariant() {
        let path = simulate_exact(&params(ModelKind::Vasicek), 4.0, 400, 3).unwrap();
        let base = calibrate_vasicek(&path).unwrap();
        for c in [-7.5, -0.3, 0.25, 3.0, 12.0] {
            let shifted: Vec<f64> = path.iter().map(|r| r + c).collect();
            let s = calibrate_vasicek(&shifted).unwrap();
            assert!((s.params.theta - base.params.theta - c).abs() < 1e-10);
            assert!((s.params.kappa - base.params.kappa).abs() < 1e-10);
            assert!((s.params.sigma - base.params.sigma).abs() < 1e-10);
        }
    }

    #[test]
    fn printed_cir_formula_on_small_sample() {
        // hand-evaluated on r = (1, 2, 1.5, 2.5)
        let r = [1.0, 2.0, 1.5, 2.5];
        let s_ratio: f64 = 2.0 + 0.75 + 2.5 / 1.5;
        let s_next: f64 = 6.0;
        let s_inv: f64 = 1.0 + 0.5 + 1.0 / 1.5;
        let s_prev = 4.5;
        let decay: f64 = (3.0 * s_ratio - s_next * s_inv) / (9.0 - s_prev * s_inv);
        let res = calibrate_cir(&r).unwrap();
        if decay > 0.0 {
            assert!((res.params.kappa + decay.ln()).abs() < 1e-14);
            let theta = s_next / 3.0 + decay / (3.0 * (1.0 - decay)) * 1.5;
            assert!((res.params.theta - theta).abs() < 1e-12);
        } else {
            assert!(!res.valid);
        }
    }
}
