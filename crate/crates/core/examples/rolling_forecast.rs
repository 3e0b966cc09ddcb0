//! Rolling one-step forecasts against the EWMA baseline.

use ratefit::backtest::{forecast_rolling, ForecastSettings, WindowPolicy, DEFAULT_EWMA_LAMBDA};
use ratefit::gof::{DistributionKind, GofConfig};
use ratefit::market_data::RateSeries;
use ratefit::models::{simulate_regimes, ModelKind, ModelParams, Regime};

fn main() -> ratefit::Result<()> {
    let p = |theta, sigma| ModelParams::new(ModelKind::Cir, 0.1, theta, sigma);
    let regimes = [
        Regime { start: 0, params: p(4.0, 0.10)? },
        Regime { start: 103, params: p(2.0, 0.20)? },
        Regime { start: 206, params: p(3.0, 0.05)? },
    ];
    let series = RateSeries::from_rates("30Y", &simulate_regimes(&regimes, 4.0, 307, 4)?);
    let cfg = GofConfig::default();
    let settings = ForecastSettings::new(52, DEFAULT_EWMA_LAMBDA);

    for policy in [WindowPolicy::Backward, WindowPolicy::Whole] {
        let r = forecast_rolling(&series, DistributionKind::Normal, ModelKind::Cir, &settings.with_policy(policy), &cfg)?;
        let sizes = r.window_sizes();
        let mean_size = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
        println!(
            "{policy:?}: model RMSE {:.5}  EWMA RMSE {:.5}  mean window {mean_size:.1}  fallbacks {}",
            r.rmse_model, r.rmse_ewma, r.fallbacks
        );
    }
    Ok(())
}
