//! Split a series into homogeneous groups, and find the latest
//! homogeneous window.

use ratefit::gof::{DistributionKind, GofConfig};
use ratefit::models::{simulate_regimes, ModelKind, ModelParams, Regime};
use ratefit::partition::{backward_window, forward_partition};

fn main() -> ratefit::Result<()> {
    let p = |theta, sigma| ModelParams::new(ModelKind::Cir, 0.2, theta, sigma);
    let regimes = [
        Regime { start: 0, params: p(4.0, 0.1)? },
        Regime { start: 60, params: p(2.0, 0.3)? },
    ];
    let xs = simulate_regimes(&regimes, 4.0, 119, 21)?;
    let cfg = GofConfig::default();

    let part = forward_partition(&xs, DistributionKind::Normal, &cfg)?;
    for g in &part.groups {
        let p = g.test.map(|t| t.p_value).unwrap_or(f64::NAN);
        println!(
            "[{:>3}, {:>3}]  n {:>3}  p {:.3}  forced {}  johnson {}",
            g.range.start,
            g.range.end,
            g.range.len(),
            p,
            g.forced,
            g.johnson.is_some()
        );
    }
    if let Some(l) = part.leftover {
        println!("leftover [{}, {}]", l.start, l.end);
    }

    let w = backward_window(&xs, DistributionKind::Normal, &cfg)?;
    println!("latest window starts at {} ({} points, forced {})", w.change_point, w.window.len(), w.forced);
    Ok(())
}
