//! EWMA forecast and the error measures.

use ratefit::backtest::{ewma_forecast, rmse, total_rmse, weighted_mean_rmse, EwmaConfig};

fn main() -> ratefit::Result<()> {
    let window = [3.10, 3.05, 3.12, 3.20, 3.18];
    for lambda in [0.5, 0.94, 0.9999] {
        let f = ewma_forecast(&window, &EwmaConfig::new(lambda, window.len())?)?;
        println!("lambda {lambda:<6}  forecast {f:.5}");
    }

    let groups = [vec![0.02, -0.01, 0.03, -0.02], vec![0.10, -0.08, 0.05]];
    for (k, g) in groups.iter().enumerate() {
        println!("group {k}: rmse {:.5}", rmse(g)?);
    }
    println!("total {:.5}", total_rmse(&groups, 7)?);
    println!("weighted mean {:.5}", weighted_mean_rmse(&groups, 7)?);
    Ok(())
}
