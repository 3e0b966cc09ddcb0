use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::fit::opt;
use super::metrics::{ewma_forecast, rmse, EwmaConfig};
use super::{calibrate_pieces, choose_shift, one_step, usable, Piece, MIN_CALIBRATION_SIZE};
use crate::error::{Error, Result};
use crate::gof::{DistributionKind, GofConfig, MIN_SAMPLE};
use crate::market_data::RateSeries;
use crate::models::{apply_shift, CalibrationResult, ModelKind};
use crate::partition::{backward_window, johnson_if_near_boundary, IndexRange};

/// How the calibration window is chosen inside the trailing `m` rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Latest homogeneous window by backward selection, joined with earlier
    /// sub-groups while calibration is not possible.
    Backward,
    /// The whole trailing window, no partition.
    Whole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastSettings {
    pub m: usize,
    pub ewma_lambda: f64,
    pub policy: WindowPolicy,
}

impl ForecastSettings {
    pub fn new(m: usize, ewma_lambda: f64) -> Self {
        Self {
            m,
            ewma_lambda,
            policy: WindowPolicy::Backward,
        }
    }

    pub fn with_policy(mut self, policy: WindowPolicy) -> Self {
        self.policy = policy;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    /// Index of the forecast (realised) observation.
    pub index: usize,
    pub date: NaiveDate,
    pub realized: f64,
    pub model: f64,
    pub ewma: f64,
    pub window_len: usize,
    /// Absolute index of the first observation used for calibration.
    pub change_point: usize,
    /// The latest window was rejected even at its minimal size.
    pub forced: bool,
    /// Calibration failed on the whole trailing window; `model` is the
    /// last observed rate.
    pub fallback: bool,
    pub calibration: CalibrationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub maturity: String,
    pub model: ModelKind,
    pub kind: DistributionKind,
    pub level: f64,
    pub settings: ForecastSettings,
    pub records: Vec<ForecastRecord>,
    pub rmse_model: f64,
    pub rmse_ewma: f64,
    pub fallbacks: usize,
}

impl ForecastReport {
    pub fn window_sizes(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.window_len).collect()
    }

    pub fn change_points(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.change_point).collect()
    }

    /// One row per forecast.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "index",
            "date",
            "realized",
            "model",
            "ewma",
            "window_len",
            "change_point",
            "forced",
            "fallback",
            "kappa",
            "theta",
            "sigma",
        ])?;
        for r in &self.records {
            let p = &r.calibration.params;
            let finite = |v: f64| opt(v.is_finite().then_some(v));
            out.write_record([
                r.index.to_string(),
                r.date.format("%Y-%m-%d").to_string(),
                r.realized.to_string(),
                r.model.to_string(),
                r.ewma.to_string(),
                r.window_len.to_string(),
                r.change_point.to_string(),
                r.forced.to_string(),
                r.fallback.to_string(),
                finite(p.kappa),
                finite(p.theta),
                finite(p.sigma),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

struct Step {
    forecast: Option<f64>,
    start: usize,
    forced: bool,
    calibration: CalibrationResult,
}

fn step_forecast(
    window: &[f64],
    kind: DistributionKind,
    model: ModelKind,
    policy: WindowPolicy,
    cfg: &GofConfig,
) -> Result<Step> {
    let m = window.len();
    let shift = choose_shift(window, kind, model)?;
    let shifted = apply_shift(window, &shift);
    let whole = [Piece {
        range: IndexRange::new(0, m - 1),
        johnson: None,
    }];
    let (pieces, forced) = match policy {
        WindowPolicy::Whole => (whole.to_vec(), false),
        WindowPolicy::Backward => {
            let sel = backward_window(&shifted, kind, cfg)?;
            let piece = Piece {
                range: sel.window,
                johnson: johnson_if_near_boundary(kind, &sel.test, sel.window.slice(&shifted), cfg),
            };
            (vec![piece], sel.forced)
        }
    };
    let mut pieces = pieces;
    let mut calibration = calibrate_pieces(model, &shifted, &pieces, shift);
    // join the preceding sub-group until calibration is possible
    while !usable(&calibration) && pieces[0].range.start > 0 {
        let start = pieces[0].range.start;
        let prefix = &shifted[..start];
        let piece = if prefix.len() >= MIN_SAMPLE {
            let sel = backward_window(prefix, kind, cfg)?;
            Piece {
                range: sel.window,
                johnson: johnson_if_near_boundary(kind, &sel.test, sel.window.slice(prefix), cfg),
            }
        } else {
            Piece {
                range: IndexRange::new(0, start - 1),
                johnson: None,
            }
        };
        pieces.insert(0, piece);
        calibration = calibrate_pieces(model, &shifted, &pieces, shift);
    }
    let start = pieces[0].range.start;
    let forecast = if usable(&calibration) {
        one_step(&calibration, shifted[m - 1])
    } else {
        None
    };
    Ok(Step {
        forecast,
        start,
        forced,
        calibration,
    })
}

/// Rolling next-step forecasts. For each `h ≥ m` the trailing `m` rates
/// `r[h−m..h]` give a model forecast and an EWMA forecast of `r[h]`.
pub fn forecast_rolling(
    series: &RateSeries,
    kind: DistributionKind,
    model: ModelKind,
    settings: &ForecastSettings,
    cfg: &GofConfig,
) -> Result<ForecastReport> {
    cfg.validate()?;
    let m = settings.m;
    if m < MIN_CALIBRATION_SIZE {
        return Err(Error::Usage(format!("window m must be at least {MIN_CALIBRATION_SIZE}, got {m}")));
    }
    if series.len() <= m {
        return Err(Error::Usage(format!(
            "series of length {} is not longer than the window m = {m}",
            series.len()
        )));
    }
    let ewma_cfg = EwmaConfig::new(settings.ewma_lambda, m)?;
    let rates = series.rates();
    let dates = series.dates();
    let mut records = Vec::with_capacity(rates.len() - m);
    for h in m..rates.len() {
        let window = &rates[h - m..h];
        let step = step_forecast(window, kind, model, settings.policy, cfg)?;
        let fallback = step.forecast.is_none();
        records.push(ForecastRecord {
            index: h,
            date: dates[h],
            realized: rates[h],
            model: step.forecast.unwrap_or(window[m - 1]),
            ewma: ewma_forecast(window, &ewma_cfg)?,
            window_len: m - step.start,
            change_point: h - m + step.start,
            forced: step.forced,
            fallback,
            calibration: step.calibration,
        });
    }
    let model_err: Vec<f64> = records.iter().map(|r| r.realized - r.model).collect();
    let ewma_err: Vec<f64> = records.iter().map(|r| r.realized - r.ewma).collect();
    Ok(ForecastReport {
        maturity: series.maturity.clone(),
        model,
        kind,
        level: cfg.level,
        settings: *settings,
        rmse_model: rmse(&model_err)?,
        rmse_ewma: rmse(&ewma_err)?,
        fallbacks: records.iter().filter(|r| r.fallback).count(),
        records,
    })
}
