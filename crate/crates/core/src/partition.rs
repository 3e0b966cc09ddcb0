//! Segmentation of a rate series into contiguous sub-samples that each pass
//! a goodness-of-fit test.
//!
//! A window whose test cannot be evaluated (zero variance, failed ncx2 fit)
//! counts as a rejection.

use serde::{Deserialize, Serialize};

use crate::distributions::{fit_johnson, johnson_forward, JohnsonFit};
use crate::error::{Error, Result};
use crate::gof::{lilliefors_test_with, DistributionKind, GofConfig, GofResult, MIN_SAMPLE};

/// Inclusive, 0-based index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: usize,
    pub end: usize,
}

impl IndexRange {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn slice<'a, T>(&self, xs: &'a [T]) -> &'a [T] {
        &xs[self.start..=self.end]
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

/// Johnson normalisation of one group: `z = γ + δ f((x − ξ)/λ)`, then
/// `x' = sd·z + mean` with the group's sample mean and deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohnsonStep {
    pub fit: JohnsonFit,
    pub mean: f64,
    pub sd: f64,
    /// Lilliefors p-value of the transformed group.
    pub p_value: f64,
}

impl JohnsonStep {
    pub fn transform(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter()
            .map(|x| johnson_forward(&self.fit, *x).map(|z| self.sd * z + self.mean))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub range: IndexRange,
    /// The minimal window already rejected; kept so the partition never stops.
    pub forced: bool,
    /// Test of the raw group. `None` when the test could not be evaluated.
    pub test: Option<GofResult>,
    pub johnson: Option<JohnsonStep>,
}

impl Group {
    pub fn johnson_applied(&self) -> bool {
        self.johnson.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub kind: DistributionKind,
    pub n: usize,
    pub groups: Vec<Group>,
    pub leftover: Option<IndexRange>,
}

impl Partition {
    pub fn ranges(&self) -> Vec<IndexRange> {
        self.groups.iter().map(|g| g.range).collect()
    }

    pub fn johnson_applied(&self) -> Vec<bool> {
        self.groups.iter().map(Group::johnson_applied).collect()
    }

    /// Number of observations inside groups.
    pub fn covered(&self) -> usize {
        self.groups.iter().map(|g| g.range.len()).sum()
    }

    /// Group values as used for calibration: Johnson-transformed where the
    /// transform was applied, raw otherwise.
    pub fn group_values(&self, series: &[f64], k: usize) -> Result<Vec<f64>> {
        let g = &self.groups[k];
        let raw = g.range.slice(series);
        match &g.johnson {
            Some(step) => step.transform(raw),
            None => Ok(raw.to_vec()),
        }
    }

    /// Checks contiguity, minimum group size and leftover bounds.
    pub fn check(&self) -> Result<()> {
        let mut next = 0;
        for g in &self.groups {
            if g.range.start != next || g.range.len() < MIN_SAMPLE {
                return Err(Error::Pipeline(format!("malformed group {:?}", g.range)));
            }
            next = g.range.end + 1;
        }
        match self.leftover {
            Some(r) if r.start != next || r.end + 1 != self.n || r.len() >= MIN_SAMPLE => {
                Err(Error::Pipeline(format!("malformed leftover {r:?}")))
            }
            None if next != self.n => Err(Error::Pipeline("partition does not reach the end".into())),
            _ => Ok(()),
        }
    }
}

fn run_test(kind: DistributionKind, xs: &[f64], cfg: &GofConfig) -> Result<Option<GofResult>> {
    match cfg.test(kind, xs) {
        Ok(r) => Ok(Some(r)),
        Err(Error::Usage(m)) => Err(Error::Usage(m)),
        Err(_) => Ok(None),
    }
}

fn passes(r: &Option<GofResult>) -> bool {
    matches!(r, Some(r) if !r.reject)
}

fn check_input(series: &[f64], kind: DistributionKind, cfg: &GofConfig) -> Result<()> {
    cfg.validate()?;
    if series.len() < MIN_SAMPLE {
        return Err(Error::Domain(format!(
            "series needs at least {MIN_SAMPLE} observations, got {}",
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    if kind == DistributionKind::Ncx2 && series.iter().any(|v| *v <= 0.0) {
        return Err(Error::Domain("ncx2 partition requires a positive (shifted) series".into()));
    }
    Ok(())
}

fn sample_mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn johnson_step(xs: &[f64], cfg: &GofConfig) -> Option<JohnsonStep> {
    let fit = fit_johnson(xs).ok()?;
    let (mean, sd) = sample_mean_sd(xs);
    let mut step = JohnsonStep {
        fit,
        mean,
        sd,
        p_value: f64::NAN,
    };
    let transformed = step.transform(xs).ok()?;
    let check = lilliefors_test_with(&transformed, cfg).ok()?;
    if check.reject {
        return None;
    }
    step.p_value = check.p_value;
    Some(step)
}

/// Johnson step for a closed group whose passing p-value lies within the
/// band above the level (normal kind only).
pub(crate) fn johnson_if_near_boundary(
    kind: DistributionKind,
    test: &Option<GofResult>,
    xs: &[f64],
    cfg: &GofConfig,
) -> Option<JohnsonStep> {
    match (kind, test) {
        (DistributionKind::Normal, Some(r)) if !r.reject && r.near_boundary => johnson_step(xs, cfg),
        _ => None,
    }
}

/// Forward segmentation: starting from four points, grow each group while
/// the test keeps passing; the group ends at the last passing length. A
/// remainder shorter than four is left over. For the normal kind, a group
/// whose p-value lies just above the level is Johnson-normalised when the
/// transformed group still passes.
pub fn forward_partition(series: &[f64], kind: DistributionKind, cfg: &GofConfig) -> Result<Partition> {
    check_input(series, kind, cfg)?;
    let n = series.len();
    let mut groups = Vec::new();
    let mut start = 0;
    while n - start >= MIN_SAMPLE {
        let mut end = start + MIN_SAMPLE;
        let mut last = run_test(kind, &series[start..end], cfg)?;
        let forced = !passes(&last);
        if !forced {
            while end < n {
                let next = run_test(kind, &series[start..=end], cfg)?;
                if !passes(&next) {
                    break;
                }
                last = next;
                end += 1;
            }
        }
        let range = IndexRange::new(start, end - 1);
        let johnson = johnson_if_near_boundary(kind, &last, range.slice(series), cfg);
        groups.push(Group {
            range,
            forced,
            test: last,
            johnson,
        });
        start = end;
    }
    let leftover = (start < n).then(|| IndexRange::new(start, n - 1));
    Ok(Partition {
        kind,
        n,
        groups,
        leftover,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSelection {
    /// Index of the earliest observation in the window.
    pub change_point: usize,
    pub window: IndexRange,
    pub kind: DistributionKind,
    /// Even the minimal window was rejected.
    pub forced: bool,
    /// Test of the selected window.
    pub test: Option<GofResult>,
}

/// Backward window selection: grow from the last four observations towards
/// the past and keep the largest window reached before the first rejection.
pub fn backward_window(series: &[f64], kind: DistributionKind, cfg: &GofConfig) -> Result<WindowSelection> {
    check_input(series, kind, cfg)?;
    let n = series.len();
    let mut len = MIN_SAMPLE;
    let mut test = run_test(kind, &series[n - len..], cfg)?;
    let forced = !passes(&test);
    if !forced {
        while len < n {
            let next = run_test(kind, &series[n - len - 1..], cfg)?;
            if !passes(&next) {
                break;
            }
            test = next;
            len += 1;
        }
    }
    Ok(WindowSelection {
        change_point: n - len,
        window: IndexRange::new(n - len, n - 1),
        kind,
        forced,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64, sd: f64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut r);
                sd * z
            })
            .collect()
    }

    fn cfg() -> GofConfig {
        GofConfig::default()
    }

    #[test]
    fn four_point_series_is_one_group() {
        let xs = [0.1, -0.4, 0.3, 0.05];
        let p = forward_partition(&xs, DistributionKind::Normal, &cfg()).unwrap();
        assert_eq!(p.ranges(), vec![IndexRange::new(0, 3)]);
        assert!(p.leftover.is_none());
        assert!(!p.groups[0].forced);
        let w = backward_window(&xs, DistributionKind::Normal, &cfg()).unwrap();
        assert_eq!(w.window, IndexRange::new(0, 3));
    }

    #[test]
    fn short_series_is_an_error() {
        assert!(forward_partition(&[1.0, 2.0, 3.0], DistributionKind::Normal, &cfg()).is_err());
        assert!(backward_window(&[1.0, 2.0, 3.0], DistributionKind::Normal, &cfg()).is_err());
        assert!(forward_partition(&[1.0, 2.0, -3.0, 4.0], DistributionKind::Ncx2, &cfg()).is_err());
    }

    #[test]
    fn constant_stretch_is_forced() {
        let xs = [2.0; 9];
        let p = forward_partition(&xs, DistributionKind::Normal, &cfg()).unwrap();
        assert_eq!(p.ranges(), vec![IndexRange::new(0, 3), IndexRange::new(4, 7)]);
        assert!(p.groups.iter().all(|g| g.forced));
        assert_eq!(p.leftover, Some(IndexRange::new(8, 8)));
        p.check().unwrap();
        let w = backward_window(&xs, DistributionKind::Normal, &cfg()).unwrap();
        assert!(w.forced);
        assert_eq!(w.window.len(), 4);
    }

    #[test]
    fn groups_pass_when_retested() {
        let mut xs = normals(40, 1, 0.1);
        xs.extend(normals(40, 2, 1.0).into_iter().map(|x| x + 3.0));
        let p = forward_partition(&xs, DistributionKind::Normal, &cfg()).unwrap();
        p.check().unwrap();
        for g in p.groups.iter().filter(|g| !g.forced) {
            let values = g.range.slice(&xs);
            assert!(!lilliefors_test_with(values, &cfg()).unwrap().reject);
            if let Some(step) = g.johnson {
                let t = step.transform(values).unwrap();
                assert!(!lilliefors_test_with(&t, &cfg()).unwrap().reject);
            }
        }
    }

    #[test]
    fn ncx2_partition_covers_series() {
        let xs: Vec<f64> = normals(60, 3, 0.2).into_iter().map(|x| x + 3.0).collect();
        let p = forward_partition(&xs, DistributionKind::Ncx2, &cfg()).unwrap();
        p.check().unwrap();
        assert_eq!(p.kind, DistributionKind::Ncx2);
        assert!(p.johnson_applied().iter().all(|j| !j));
    }

    #[test]
    fn backward_window_is_idempotent() {
        for seed in 0..6 {
            let mut xs = normals(30, 10 + seed, 3.0);
            xs.extend(normals(20, 20 + seed, 0.3));
            let w = backward_window(&xs, DistributionKind::Normal, &cfg()).unwrap();
            let inner = w.window.slice(&xs);
            let again = backward_window(inner, DistributionKind::Normal, &cfg()).unwrap();
            assert_eq!(again.window.len(), w.window.len());
            assert_eq!(again.forced, w.forced);
        }
    }

    #[test]
    fn partition_round_trips_through_json() {
        let xs = normals(30, 4, 1.0);
        let p = forward_partition(&xs, DistributionKind::Normal, &cfg()).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: Partition = serde_json::from_str(&json).unwrap();
        assert_eq!(back.ranges(), p.ranges());
        assert_eq!(back.leftover, p.leftover);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn groups_and_leftover_cover_every_index(seed in 0u64..1000, n in 4usize..30) {
            let xs = normals(n, seed, 1.0);
            let p = forward_partition(&xs, DistributionKind::Normal, &cfg()).unwrap();
            let mut idx: Vec<usize> = p.groups.iter().flat_map(|g| g.range.start..=g.range.end).collect();
            if let Some(l) = p.leftover {
                idx.extend(l.start..=l.end);
            }
            prop_assert_eq!(idx, (0..n).collect::<Vec<_>>());
            prop_assert!(p.check().is_ok());
        }
    }
}
