//! Johnson translation system `Z = γ + δ·f((X − ξ)/λ)`.
//!
//! Fitting uses the quantile-ratio method: with `z = 1/2`, the sample
//! quantiles at the normal points `±z` and `±3z` give the tail spans
//! `m = x(3z) − x(z)`, `n = x(−z) − x(−3z)` and the central span
//! `p = x(z) − x(−z)`. The discriminant `mn/p²` selects the family
//! (`> 1` unbounded, `< 1` bounded, `= 1` lognormal) and closed forms give
//! the four parameters.

use serde::{Deserialize, Serialize};

use super::normal::std_normal_cdf;
use crate::error::{domain, Error, Result};

const Z: f64 = 0.5;
/// Relative tolerance for treating `m/p`, `n/p` as 1 (normal family).
const NORMAL_TOLERANCE: f64 = 0.1;
/// Tolerance on `mn/p² − 1` for the lognormal family.
const LOGNORMAL_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JohnsonFamily {
    /// Unbounded, `f = asinh`.
    SU,
    /// Bounded, `f(u) = ln(u / (1 − u))`.
    SB,
    /// Lognormal, `f = ln`.
    SL,
    /// Normal, `f` is the identity.
    SN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohnsonFit {
    pub family: JohnsonFamily,
    pub gamma: f64,
    pub delta: f64,
    pub xi: f64,
    pub lambda: f64,
}

impl JohnsonFit {
    pub fn new(family: JohnsonFamily, gamma: f64, delta: f64, xi: f64, lambda: f64) -> Result<Self> {
        if !(delta > 0.0) || !(lambda > 0.0) || !gamma.is_finite() || !xi.is_finite() {
            return Err(domain(format!(
                "invalid Johnson parameters: γ={gamma}, δ={delta}, ξ={xi}, λ={lambda}"
            )));
        }
        Ok(Self {
            family,
            gamma,
            delta,
            xi,
            lambda,
        })
    }

    pub fn forward(&self, x: f64) -> Result<f64> {
        johnson_forward(self, x)
    }

    pub fn inverse(&self, z: f64) -> Result<f64> {
        johnson_inverse(self, z)
    }
}

/// `z = γ + δ f((x − ξ)/λ)`.
pub fn johnson_forward(fit: &JohnsonFit, x: f64) -> Result<f64> {
    let u = (x - fit.xi) / fit.lambda;
    let f = match fit.family {
        JohnsonFamily::SU => u.asinh(),
        JohnsonFamily::SB => {
            if !(u > 0.0 && u < 1.0) {
                return Err(domain(format!("SB argument {u} outside (0, 1)")));
            }
            (u / (1.0 - u)).ln()
        }
        JohnsonFamily::SL => {
            if !(u > 0.0) {
                return Err(domain(format!("SL argument {u} not positive")));
            }
            u.ln()
        }
        JohnsonFamily::SN => u,
    };
    Ok(fit.gamma + fit.delta * f)
}

/// Inverse of [`johnson_forward`].
pub fn johnson_inverse(fit: &JohnsonFit, z: f64) -> Result<f64> {
    let t = (z - fit.gamma) / fit.delta;
    let u = match fit.family {
        JohnsonFamily::SU => t.sinh(),
        JohnsonFamily::SB => 1.0 / (1.0 + (-t).exp()),
        JohnsonFamily::SL => t.exp(),
        JohnsonFamily::SN => t,
    };
    let x = fit.xi + fit.lambda * u;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Numeric(format!("Johnson inverse overflow at z={z}")))
    }
}

/// Linearly interpolated empirical quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Selects a Johnson family and fits it by the quantile-ratio method.
pub fn fit_johnson(sample: &[f64]) -> Result<JohnsonFit> {
    if sample.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 observations, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(domain("sample contains non-finite values"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |z: f64| quantile_sorted(&sorted, std_normal_cdf(z));
    let (x_m3, x_m1, x_p1, x_p3) = (q(-3.0 * Z), q(-Z), q(Z), q(3.0 * Z));
    let m = x_p3 - x_p1;
    let n = x_m1 - x_m3;
    let p = x_p1 - x_m1;
    if !(m > 0.0 && n > 0.0 && p > 0.0) {
        return Err(Error::Fit(format!(
            "degenerate quantile spans m={m}, n={n}, p={p}"
        )));
    }
    let (mp, np) = (m / p, n / p);
    let d = mp * np;
    let centre = (x_p1 + x_m1) / 2.0;

    if (mp - 1.0).abs() <= NORMAL_TOLERANCE && (np - 1.0).abs() <= NORMAL_TOLERANCE {
        // span p covers 2z standard units
        return JohnsonFit::new(JohnsonFamily::SN, 0.0, 1.0, centre, p / (2.0 * Z));
    }
    if (d - 1.0).abs() <= LOGNORMAL_TOLERANCE && mp > 1.0 {
        let delta = 2.0 * Z / mp.ln();
        let gamma = delta * ((mp - 1.0) / (p * mp.sqrt())).ln();
        let xi = centre - (p / 2.0) * (mp + 1.0) / (mp - 1.0);
        return JohnsonFit::new(JohnsonFamily::SL, gamma, delta, xi, 1.0);
    }
    if d > 1.0 {
        let delta = 2.0 * Z / (0.5 * (mp + np)).acosh();
        let gamma = delta * ((np - mp) / (2.0 * (d - 1.0).sqrt())).asinh();
        let lambda = 2.0 * p * (d - 1.0).sqrt() / ((mp + np - 2.0) * (mp + np + 2.0).sqrt());
        let xi = centre + p * (np - mp) / (2.0 * (mp + np - 2.0));
        JohnsonFit::new(JohnsonFamily::SU, gamma, delta, xi, lambda)
    } else {
        let (pm, pn) = (p / m, p / n);
        let prod = (1.0 + pm) * (1.0 + pn);
        let delta = Z / (0.5 * prod.sqrt()).acosh();
        let gamma = delta * ((pn - pm) * (prod - 4.0).sqrt() / (2.0 * (pm * pn - 1.0))).asinh();
        let lambda = p * ((prod - 2.0).powi(2) - 4.0).sqrt() / (pm * pn - 1.0);
        let xi = centre - lambda / 2.0 + p * (pn - pm) / (2.0 * (pm * pn - 1.0));
        JohnsonFit::new(JohnsonFamily::SB, gamma, delta, xi, lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
    }

    fn moments(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let s = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n / v.powf(1.5);
        (m, v.sqrt(), s)
    }

    /// Generates from a known Johnson law and checks the fitted transform
    /// maps the sample back to approximately standard normal.
    fn check_normalises(truth: JohnsonFit, expect: JohnsonFamily) {
        let xs: Vec<f64> = normals(20_000, 5)
            .into_iter()
            .map(|z| johnson_inverse(&truth, z).unwrap())
            .collect();
        let fit = fit_johnson(&xs).unwrap();
        assert_eq!(fit.family, expect, "{fit:?}");
        let zs: Vec<f64> = xs.iter().filter_map(|x| johnson_forward(&fit, *x).ok()).collect();
        assert!(zs.len() as f64 > 0.99 * xs.len() as f64);
        let (m, sd, skew) = moments(&zs);
        assert!(m.abs() < 0.05 && (sd - 1.0).abs() < 0.05 && skew.abs() < 0.2, "{m} {sd} {skew} {fit:?}");
    }

    #[test]
    fn identity_and_log_points() {
        let sn = JohnsonFit::new(JohnsonFamily::SN, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(johnson_forward(&sn, 2.5).unwrap(), 2.5);
        assert_eq!(johnson_inverse(&sn, 2.5).unwrap(), 2.5);
        let sl = JohnsonFit::new(JohnsonFamily::SL, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(johnson_forward(&sl, 1.0).unwrap(), 0.0);
        assert_eq!(johnson_inverse(&sl, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn bounded_family_rejects_out_of_domain() {
        let sb = JohnsonFit::new(JohnsonFamily::SB, 0.2, 1.3, 0.0, 1.0).unwrap();
        assert!(johnson_forward(&sb, 1.5).is_err());
        assert!(johnson_forward(&sb, -0.1).is_err());
        assert!(johnson_forward(&sb, 0.4).is_ok());
    }

    #[test]
    fn normal_sample_selects_normal_family() {
        let fit = fit_johnson(&normals(10_000, 1)).unwrap();
        match fit.family {
            JohnsonFamily::SN => {}
            JohnsonFamily::SU => assert!(fit.gamma.abs() < 0.2 && (fit.delta - 1.0).abs() < 0.3),
            other => panic!("unexpected family {other:?}"),
        }
    }

    #[test]
    fn lognormal_sample_selects_lognormal_family() {
        let xs: Vec<f64> = normals(10_000, 2).into_iter().map(|z| (0.6 * z).exp() + 1.0).collect();
        let fit = fit_johnson(&xs).unwrap();
        assert_eq!(fit.family, JohnsonFamily::SL);
    }

    #[test]
    fn fitted_transforms_normalise() {
        check_normalises(
            JohnsonFit::new(JohnsonFamily::SU, -1.2, 1.5, 2.0, 0.7).unwrap(),
            JohnsonFamily::SU,
        );
        check_normalises(
            JohnsonFit::new(JohnsonFamily::SB, 0.8, 1.1, -1.0, 3.0).unwrap(),
            JohnsonFamily::SB,
        );
        check_normalises(
            JohnsonFit::new(JohnsonFamily::SL, 0.3, 1.4, 0.5, 1.0).unwrap(),
            JohnsonFamily::SL,
        );
    }

    #[test]
    fn constant_sample_fails() {
        assert!(matches!(fit_johnson(&[1.0; 30]), Err(Error::Fit(_))));
        assert!(fit_johnson(&[1.0, 2.0, 3.0]).is_err());
    }

    fn family() -> impl Strategy<Value = JohnsonFamily> {
        prop_oneof![
            Just(JohnsonFamily::SU),
            Just(JohnsonFamily::SB),
            Just(JohnsonFamily::SL),
            Just(JohnsonFamily::SN),
        ]
    }

    proptest! {
        #[test]
        fn inverse_of_forward_is_identity(
            fam in family(),
            gamma in -2.0f64..2.0,
            delta in 0.3f64..3.0,
            xi in -5.0f64..5.0,
            lambda in 0.1f64..4.0,
            u in 0.001f64..0.999,
            spread in -20.0f64..20.0,
        ) {
            let fit = JohnsonFit::new(fam, gamma, delta, xi, lambda).unwrap();
            let x = match fam {
                JohnsonFamily::SB => xi + lambda * u,
                JohnsonFamily::SL => xi + lambda * u * spread.abs().max(0.01),
                _ => xi + lambda * spread,
            };
            let back = johnson_inverse(&fit, johnson_forward(&fit, x).unwrap()).unwrap();
            prop_assert!((back - x).abs() <= 1e-10 * (1.0 + x.abs()), "{fit:?} x={x} back={back}");
        }
    }
}
