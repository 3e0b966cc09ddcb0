//! Goodness-of-fit decisions: the Lilliefors normality test and a
//! Kolmogorov–Smirnov test against a fitted non-central chi-square.
//!
//! Both statistics are sup-distances between the empirical CDF and a CDF
//! whose parameters were estimated from the same sample, so their null
//! laws differ from the classical Kolmogorov distribution. P-values come
//! from seeded Monte Carlo null tables:
//!
//! * Lilliefors: the statistic is location–scale invariant, so its null law
//!   depends only on `n`; one table of [`LILLIEFORS_REPLICATES`] standard
//!   normal samples is built per sample size.
//! * KS / non-central χ²: a parametric bootstrap. Each replicate draws `n`
//!   values from a reference law, refits it, and records the distance. The
//!   statistic is scale invariant under the moment fit, so the reference is
//!   indexed by the fitted law's skewness and noncentrality share, and by
//!   an `n` bucket (exact up to 40, then ~10% geometric steps with the
//!   `√n·D` scaling).

mod null_table;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distributions::{fit_ncx2, ncx2_cdf, std_normal_cdf, NoncentralChiSquareParams};
use crate::error::{Error, Result};
use crate::rng;
use null_table::{get_or_build, TableKey, TableKind};

pub use null_table::CACHE_DIR_ENV;

pub const DEFAULT_LEVEL: f64 = 0.05;
pub const DEFAULT_NULL_SEED: u64 = 0x5EED_0F_1177_1EF0;
pub const LILLIEFORS_REPLICATES: usize = 100_000;
pub const KS_NCX2_REPLICATES: usize = 10_000;
/// Width of the band above the level inside which a passing normality
/// test triggers the Johnson transformation.
pub const JOHNSON_BAND: f64 = 1e-2;
pub const MIN_SAMPLE: usize = 4;

/// Distribution family a sub-sample is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    Normal,
    Ncx2,
}

impl std::fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistributionKind::Normal => "normal",
            DistributionKind::Ncx2 => "ncx2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub level: f64,
    /// Passed, but with `0 < p − level ≤ JOHNSON_BAND`.
    pub near_boundary: bool,
}

impl GofResult {
    fn new(statistic: f64, p_value: f64, level: f64) -> Self {
        let margin = p_value - level;
        Self {
            statistic,
            p_value,
            reject: p_value < level,
            level,
            near_boundary: margin > 0.0 && margin <= JOHNSON_BAND,
        }
    }
}

/// Significance level and the seed of the null tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofConfig {
    pub level: f64,
    pub null_seed: u64,
}

impl Default for GofConfig {
    fn default() -> Self {
        Self {
            level: DEFAULT_LEVEL,
            null_seed: DEFAULT_NULL_SEED,
        }
    }
}

impl GofConfig {
    pub fn with_level(level: f64) -> Self {
        Self {
            level,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Usage(format!("level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }

    /// Runs the test matching `kind`.
    pub fn test(&self, kind: DistributionKind, sample: &[f64]) -> Result<GofResult> {
        match kind {
            DistributionKind::Normal => lilliefors_test_with(sample, self),
            DistributionKind::Ncx2 => ks_ncx2_test_with(sample, self),
        }
    }
}

fn check_size(sample: &[f64]) -> Result<()> {
    if sample.len() < MIN_SAMPLE {
        return Err(Error::Test(format!(
            "need at least {MIN_SAMPLE} observations, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::Test("sample contains non-finite values".into()));
    }
    Ok(())
}

/// `sup |F_n − Φ((x − x̄)/s)|` with `s` the (n−1)-normalised deviation.
pub fn lilliefors_statistic(sample: &[f64]) -> Result<f64> {
    check_size(sample)?;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    lilliefors_sorted(&sorted)
}

fn lilliefors_sorted(sorted: &[f64]) -> Result<f64> {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 1e-12 * mean.abs().max(1e-300)) {
        return Err(Error::Test("sample has zero variance".into()));
    }
    Ok(sup_distance(sorted, |x| std_normal_cdf((x - mean) / sd)))
}

fn sup_distance(sorted: &[f64], mut cdf: impl FnMut(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            let hi = (i + 1) as f64 / n - f;
            let lo = f - i as f64 / n;
            hi.max(lo)
        })
        .fold(0.0, f64::max)
        .clamp(0.0, 1.0)
}

fn lilliefors_table(n: usize, seed: u64) -> std::sync::Arc<null_table::NullTable> {
    let key = TableKey {
        kind: TableKind::Lilliefors,
        n,
        seed,
        replicates: LILLIEFORS_REPLICATES,
    };
    get_or_build(key, || {
        let mut rng = rng::stream(rng::derive_seed(seed, key.tag()), 0);
        let mut buf = vec![0.0; n];
        (0..LILLIEFORS_REPLICATES)
            .map(|_| {
                for v in buf.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                buf.sort_by(f64::total_cmp);
                lilliefors_sorted(&buf).unwrap_or(0.0)
            })
            .collect()
    })
}

/// Lilliefors normality test at `level` with the default null seed.
pub fn lilliefors_test(sample: &[f64], level: f64) -> Result<GofResult> {
    lilliefors_test_with(sample, &GofConfig::with_level(level))
}

pub fn lilliefors_test_with(sample: &[f64], cfg: &GofConfig) -> Result<GofResult> {
    cfg.validate()?;
    let d = lilliefors_statistic(sample)?;
    let table = lilliefors_table(sample.len(), cfg.null_seed);
    Ok(GofResult::new(d, table.p_value(d), cfg.level))
}

/// `sup |F_n − F̂|` against a given non-central χ² law.
pub fn ks_ncx2_statistic(sample: &[f64], params: &NoncentralChiSquareParams) -> Result<f64> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    ks_sorted(&sorted, params)
}

fn ks_sorted(sorted: &[f64], params: &NoncentralChiSquareParams) -> Result<f64> {
    let cdf: Vec<f64> = sorted
        .iter()
        .map(|x| ncx2_cdf(*x, params))
        .collect::<Result<_>>()?;
    let mut it = cdf.iter();
    Ok(sup_distance(sorted, |_| *it.next().expect("one CDF value per point")))
}

const KS_EXACT_N: usize = 40;
const KS_BUCKET_RATIO: f64 = 1.1;

fn ks_bucket(n: usize) -> usize {
    if n <= KS_EXACT_N {
        return n;
    }
    let steps = ((n as f64 / KS_EXACT_N as f64).ln() / KS_BUCKET_RATIO.ln()).round();
    (KS_EXACT_N as f64 * KS_BUCKET_RATIO.powf(steps)).round() as usize
}

/// Shape bins: half-octaves of skewness, thirds of `λ/(df+λ)`.
fn shape_bins(p: &NoncentralChiSquareParams) -> (i32, i32) {
    let skew_bin = (2.0 * p.skewness().log2()).round().clamp(-10.0, 7.0) as i32;
    let rho = p.noncentrality / (p.df + p.noncentrality);
    let rho_bin = (3.0 * rho).round().clamp(0.0, 2.0) as i32;
    (skew_bin, rho_bin)
}

/// Unit-scale reference law at the centre of a shape bin.
fn reference_law(skew_bin: i32, rho_bin: i32) -> NoncentralChiSquareParams {
    let skew = 2f64.powf(skew_bin as f64 / 2.0);
    let rho = rho_bin as f64 / 3.0;
    let total = (8f64.sqrt() * (1.0 + 2.0 * rho) / (skew * (1.0 + rho).powf(1.5))).powi(2);
    NoncentralChiSquareParams::new((1.0 - rho) * total, rho * total, 1.0)
        .expect("reference law parameters are positive")
}

fn ks_ncx2_table(n: usize, bins: (i32, i32), seed: u64) -> std::sync::Arc<null_table::NullTable> {
    let key = TableKey {
        kind: TableKind::KsNcx2 {
            skew_bin: bins.0,
            rho_bin: bins.1,
        },
        n,
        seed,
        replicates: KS_NCX2_REPLICATES,
    };
    get_or_build(key, || {
        let law = reference_law(bins.0, bins.1);
        let mut rng = rng::stream(rng::derive_seed(seed, key.tag()), 0);
        let mut buf = vec![0.0; n];
        let mut stats = Vec::with_capacity(KS_NCX2_REPLICATES);
        let mut attempts = 0usize;
        while stats.len() < KS_NCX2_REPLICATES {
            attempts += 1;
            assert!(
                attempts < 4 * KS_NCX2_REPLICATES,
                "bootstrap replicates keep failing for {law:?}"
            );
            for v in buf.iter_mut() {
                *v = law.draw(&mut rng);
            }
            buf.sort_by(f64::total_cmp);
            // a replicate whose refit or CDF fails carries no null information
            if let Ok(d) = fit_ncx2(&buf).and_then(|fit| ks_sorted(&buf, &fit)) {
                stats.push(d);
            }
        }
        stats
    })
}

/// KS test against the moment-fitted non-central χ², p-value by parametric
/// bootstrap.
pub fn ks_ncx2_test(sample: &[f64], level: f64) -> Result<GofResult> {
    ks_ncx2_test_with(sample, &GofConfig::with_level(level))
}

pub fn ks_ncx2_test_with(sample: &[f64], cfg: &GofConfig) -> Result<GofResult> {
    cfg.validate()?;
    check_size(sample)?;
    let fit = fit_ncx2(sample)?;
    let d = ks_ncx2_statistic(sample, &fit)?;
    let n = sample.len();
    let bucket = ks_bucket(n);
    let table = ks_ncx2_table(bucket, shape_bins(&fit), cfg.null_seed);
    let scaled = d * (n as f64 / bucket as f64).sqrt();
    Ok(GofResult::new(d, table.p_value(scaled), cfg.level))
}
