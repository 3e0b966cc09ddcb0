//! Exact simulation, including a path with parameter regimes.

use ratefit::models::{forecast_expected, simulate_exact, simulate_regimes, ModelKind, ModelParams, Regime};

fn main() -> ratefit::Result<()> {
    let cir = ModelParams::new(ModelKind::Cir, 0.1, 3.0, 0.2)?;
    println!("Feller condition holds: {}", cir.feller());
    let path = simulate_exact(&cir, 1.0, 52, 1)?;
    println!("after 52 steps: {:.4}  expected {:.4}", path[52], forecast_expected(&cir, 1.0, 52));

    let vas = ModelParams::new(ModelKind::Vasicek, 0.3, -0.5, 0.15)?;
    let regimes = [
        Regime { start: 0, params: cir },
        Regime { start: 100, params: ModelParams::new(ModelKind::Cir, 0.1, 1.0, 0.1)? },
    ];
    let switched = simulate_regimes(&regimes, 3.0, 199, 2)?;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    println!("regime means: {:.3} then {:.3}", mean(&switched[50..100]), mean(&switched[150..]));

    let neg = simulate_exact(&vas, 0.0, 100, 3)?;
    println!("Vasicek minimum: {:.3}", neg.iter().cloned().fold(f64::INFINITY, f64::min));
    Ok(())
}
