//! Exact-transition path simulation, with optional piecewise regimes.

use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ModelKind, ModelParams};
use crate::distributions::NoncentralChiSquareParams;
use crate::error::{domain, Result};
use crate::rng;

/// Parameters in force from transition `start` onwards (the transition out
/// of observation `start`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub start: usize,
    pub params: ModelParams,
}

fn check_simulable(p: &ModelParams, r0: f64) -> Result<()> {
    p.validate()?;
    if !(p.kappa > 0.0) {
        return Err(domain(format!("simulation requires kappa > 0, got {}", p.kappa)));
    }
    if p.kind == ModelKind::Cir && !(p.theta > 0.0) {
        return Err(domain(format!("CIR simulation requires theta > 0, got {}", p.theta)));
    }
    if p.kind == ModelKind::Cir && !(r0 > 0.0) {
        return Err(domain(format!("CIR simulation requires r0 > 0, got {r0}")));
    }
    if !r0.is_finite() {
        return Err(domain("initial rate must be finite"));
    }
    Ok(())
}

/// One exact unit-step transition from `r`.
pub fn transition<R: rand::Rng + ?Sized>(p: &ModelParams, r: f64, rng: &mut R) -> f64 {
    let decay = (-p.kappa).exp();
    match p.kind {
        ModelKind::Vasicek => {
            let mean = p.theta + (r - p.theta) * decay;
            let var = p.sigma * p.sigma * (1.0 - decay * decay) / (2.0 * p.kappa);
            let z: f64 = rng.sample(StandardNormal);
            mean + var.sqrt() * z
        }
        ModelKind::Cir => {
            let c = 2.0 * p.kappa / (p.sigma * p.sigma * (1.0 - decay));
            let law = NoncentralChiSquareParams {
                df: 4.0 * p.kappa * p.theta / (p.sigma * p.sigma),
                noncentrality: 2.0 * c * r.max(0.0) * decay,
                scale: 1.0 / (2.0 * c),
            };
            law.draw(rng)
        }
    }
}

/// Path `r_0, …, r_steps` drawn with exact transitions.
pub fn simulate_exact(params: &ModelParams, r0: f64, steps: usize, seed: u64) -> Result<Vec<f64>> {
    simulate_regimes(
        &[Regime {
            start: 0,
            params: *params,
        }],
        r0,
        steps,
        seed,
    )
}

/// Path under a piecewise-constant schedule. Regimes must start at 0 and be
/// strictly increasing in `start`.
pub fn simulate_regimes(regimes: &[Regime], r0: f64, steps: usize, seed: u64) -> Result<Vec<f64>> {
    let first = regimes.first().ok_or_else(|| domain("empty regime schedule"))?;
    if first.start != 0 {
        return Err(domain("first regime must start at 0"));
    }
    if regimes.windows(2).any(|w| w[1].start <= w[0].start) {
        return Err(domain("regime starts must be strictly increasing"));
    }
    for reg in regimes {
        check_simulable(&reg.params, r0)?;
    }
    let mut rng = rng::stream(seed, 0);
    let mut path = Vec::with_capacity(steps + 1);
    path.push(r0);
    let mut current = 0;
    let mut r = r0;
    for t in 0..steps {
        while current + 1 < regimes.len() && regimes[current + 1].start <= t {
            current += 1;
        }
        r = transition(&regimes[current].params, r, &mut rng);
        path.push(r);
    }
    Ok(path)
}
