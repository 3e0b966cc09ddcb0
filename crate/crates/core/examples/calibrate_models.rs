//! Estimate Vasicek and CIR parameters from simulated paths.

use ratefit::models::{calibrate, make_shift, simulate_exact, ModelKind, ModelParams};

fn main() -> ratefit::Result<()> {
    for kind in ModelKind::ALL {
        let truth = ModelParams::new(kind, 0.05, 5.0, 0.1)?;
        let path = simulate_exact(&truth, 5.0, 4999, 42)?;
        let fit = calibrate(kind, &path)?;
        let p = fit.params;
        println!(
            "{kind:<8} kappa {:.4} (0.05)  theta {:.4} (5.0)  sigma {:.4} (0.1)  valid {}",
            p.kappa, p.theta, p.sigma, fit.valid
        );
    }

    // CIR needs positive rates; negative samples are shifted first
    let rates = [-0.12, -0.08, 0.01, 0.05, -0.02, 0.03, 0.10, 0.07, 0.02, -0.04, 0.0, 0.04];
    let shift = make_shift(&rates)?;
    println!("shift {:?} by {:.3}", shift.mode, shift.alpha);
    let shifted: Vec<f64> = rates.iter().map(|&r| shift.apply(r)).collect();
    let fit = calibrate(ModelKind::Cir, &shifted)?.with_shift(shift);
    println!("shifted CIR: {:?}", fit.params);
    Ok(())
}
