//! Short-rate models: calibration, positivity shift, conditional-expectation
//! forecast and exact simulation.

mod calibration;
mod shift;
mod simulate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use calibration::{calibrate, calibrate_cir, calibrate_vasicek, CalibrationResult, DENOMINATOR_GUARD};
pub use shift::{apply_shift, make_shift, unapply_shift, ShiftMode, ShiftSpec};
pub use simulate::{simulate_exact, simulate_regimes, transition, Regime};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Vasicek,
    Cir,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Vasicek, ModelKind::Cir];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Vasicek => "vasicek",
            ModelKind::Cir => "cir",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vasicek" => Ok(ModelKind::Vasicek),
            "cir" => Ok(ModelKind::Cir),
            other => Err(Error::Usage(format!("unknown model {other:?}"))),
        }
    }
}

/// `dr = κ(θ − r)dt + σ·g(r)dW` with `g = 1` (Vasicek) or `√r` (CIR); κ per
/// observation interval, θ in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
}

impl ModelParams {
    pub fn new(kind: ModelKind, kappa: f64, theta: f64, sigma: f64) -> Result<Self> {
        let p = Self {
            kind,
            kappa,
            theta,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kappa.is_finite() || !self.theta.is_finite() {
            return Err(domain("kappa and theta must be finite"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn feller(&self) -> bool {
        2.0 * self.kappa * self.theta > self.sigma * self.sigma
    }
}

/// `E[r(s + steps) | r(s)] = θ + (r_s − θ)e^{−κ·steps}`, for either model.
pub fn forecast_expected(params: &ModelParams, r_s: f64, steps: u32) -> f64 {
    params.theta + (r_s - params.theta) * (-params.kappa * steps as f64).exp()
}
