//! Segmented whole-sample fit of one maturity, written as CSV to stdout.

use ratefit::backtest::fit_sample;
use ratefit::gof::{DistributionKind, GofConfig};
use ratefit::market_data::RateSeries;
use ratefit::models::{simulate_regimes, ModelKind, ModelParams, Regime};

fn main() -> ratefit::Result<()> {
    let regimes = [
        Regime { start: 0, params: ModelParams::new(ModelKind::Cir, 0.1, 3.5, 0.1)? },
        Regime { start: 80, params: ModelParams::new(ModelKind::Cir, 0.1, 2.0, 0.2)? },
    ];
    let series = RateSeries::from_rates("10Y", &simulate_regimes(&regimes, 3.5, 159, 8)?);

    let report = fit_sample(&series, DistributionKind::Normal, ModelKind::Cir, &GofConfig::default())?;
    for g in &report.per_group {
        let p = &g.calibration.params;
        println!(
            "[{:>3}, {:>3}]  kappa {:.4}  theta {:.4}  sigma {:.4}  eps {:.4}",
            g.range.start, g.range.end, p.kappa, p.theta, p.sigma, g.epsilon
        );
    }
    println!(
        "total RMSE {:.5}, weighted mean RMSE {:.5}, over {} points",
        report.total_rmse, report.weighted_mean_rmse, report.n_covered
    );

    report.write_csv(std::io::stdout().lock())
}
