//! Whole-sample segmented fitting, rolling next-step forecasting, the EWMA
//! baseline and the error metrics.

mod fit;
mod forecast;
mod metrics;

pub use fit::{fit_sample, FitReport, GroupFit};
pub use forecast::{forecast_rolling, ForecastRecord, ForecastReport, ForecastSettings, WindowPolicy};
pub use metrics::{ewma_forecast, rmse, total_rmse, weighted_mean_rmse, EwmaConfig, DEFAULT_EWMA_LAMBDA};

use crate::error::Result;
use crate::gof::DistributionKind;
use crate::models::{calibrate, make_shift, CalibrationResult, ModelKind, ShiftSpec};
use crate::partition::{IndexRange, JohnsonStep};

/// Sub-groups smaller than this are joined with a neighbour before
/// calibration.
pub const MIN_CALIBRATION_SIZE: usize = 12;

/// Shift applied before partitioning and calibration. Vasicek on a normal
/// partition needs no positivity, so a failed shift is skipped there.
pub(crate) fn choose_shift(values: &[f64], kind: DistributionKind, model: ModelKind) -> Result<ShiftSpec> {
    match make_shift(values) {
        Ok(s) => Ok(s),
        Err(_) if model == ModelKind::Vasicek && kind == DistributionKind::Normal => Ok(ShiftSpec::NONE),
        Err(e) => Err(e),
    }
}

/// A contiguous piece of a calibration sample with its optional Johnson step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub range: IndexRange,
    pub johnson: Option<JohnsonStep>,
}

/// Calibrates the concatenated (Johnson-transformed where applicable)
/// values of `pieces`. Calibration errors yield an invalid result.
pub(crate) fn calibrate_pieces(
    model: ModelKind,
    shifted: &[f64],
    pieces: &[Piece],
    shift: ShiftSpec,
) -> CalibrationResult {
    let mut values = Vec::new();
    for p in pieces {
        let raw = p.range.slice(shifted);
        match &p.johnson {
            Some(step) => match step.transform(raw) {
                Ok(t) => values.extend(t),
                Err(_) => values.extend_from_slice(raw),
            },
            None => values.extend_from_slice(raw),
        }
    }
    let n = values.len();
    calibrate(model, &values)
        .unwrap_or_else(|_| CalibrationResult::failed(model, n))
        .with_shift(shift)
}

pub(crate) fn usable(c: &CalibrationResult) -> bool {
    c.valid && c.n_used >= MIN_CALIBRATION_SIZE
}

/// One-step expected rate in market units given the previous shifted
/// observation, or `None` if the parameters are not finite.
pub(crate) fn one_step(c: &CalibrationResult, prev_shifted: f64) -> Option<f64> {
    let p = &c.params;
    if !(p.kappa.is_finite() && p.theta.is_finite()) {
        return None;
    }
    let v = c.shift.unapply(crate::models::forecast_expected(p, prev_shifted, 1));
    v.is_finite().then_some(v)
}
