//! Fit a Johnson transformation to a skewed sample and test the result.

use rand_distr::{Distribution, LogNormal};
use ratefit::distributions::{fit_johnson, johnson_inverse};
use ratefit::gof::lilliefors_test;

fn main() -> ratefit::Result<()> {
    let mut rng = ratefit::rng::stream(11, 0);
    let law = LogNormal::new(0.5, 0.6).expect("valid lognormal");
    let xs: Vec<f64> = (0..60).map(|_| law.sample(&mut rng)).collect();

    let fit = fit_johnson(&xs)?;
    println!("{:?}: gamma {:.3} delta {:.3} xi {:.3} lambda {:.3}", fit.family, fit.gamma, fit.delta, fit.xi, fit.lambda);

    let zs = xs.iter().map(|&x| fit.forward(x)).collect::<ratefit::Result<Vec<_>>>()?;
    let before = lilliefors_test(&xs, 0.05)?;
    let after = lilliefors_test(&zs, 0.05)?;
    println!("Lilliefors raw:         D {:.4}  p {:.4}", before.statistic, before.p_value);
    println!("Lilliefors transformed: D {:.4}  p {:.4}", after.statistic, after.p_value);

    let back = johnson_inverse(&fit, zs[0])?;
    println!("round trip: {:.12} -> {:.12}", xs[0], back);
    Ok(())
}
