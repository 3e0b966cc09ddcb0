//! Scaled non-central chi-square: CDF, sampling and the moment fit.

use ratefit::distributions::{fit_ncx2, ncx2_cdf, sample_ncx2, NoncentralChiSquareParams};

fn main() -> ratefit::Result<()> {
    // law of c * chi2'(df, nc)
    let law = NoncentralChiSquareParams::new(4.0, 2.5, 0.5)?;
    println!("mean {:.4}  variance {:.4}  skewness {:.4}", law.mean(), law.variance(), law.skewness());

    for x in [0.5, 1.0, 2.0, 3.0, 5.0, 8.0] {
        println!("F({x:>3}) = {:.6}", ncx2_cdf(x, &law)?);
    }

    let xs = sample_ncx2(&law, 20_000, 7)?;
    let below = xs.iter().filter(|&&x| x <= 3.0).count() as f64 / xs.len() as f64;
    println!("empirical F(3) = {below:.4}");

    let fit = fit_ncx2(&xs)?;
    println!("refit: df {:.3}  nc {:.3}  scale {:.3}", fit.df, fit.noncentrality, fit.scale);
    Ok(())
}
