use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::metrics::{rmse, total_rmse, weighted_mean_rmse};
use super::{calibrate_pieces, choose_shift, one_step, usable, Piece};
use crate::error::{Error, Result};
use crate::gof::{DistributionKind, GofConfig};
use crate::market_data::RateSeries;
use crate::models::{apply_shift, CalibrationResult, ModelKind, ShiftSpec};
use crate::partition::{forward_partition, IndexRange, Partition};

/// Calibration segment after the merge rule, with its error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub range: IndexRange,
    /// Indices of the partition groups joined into this segment.
    pub groups: IndexRange,
    pub calibration: CalibrationResult,
    /// RMSE of the segment's one-step residuals.
    pub epsilon: f64,
    /// Parameters were unusable and the previous observation stood in.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub maturity: String,
    pub model: ModelKind,
    pub kind: DistributionKind,
    pub level: f64,
    pub shift: ShiftSpec,
    pub partition: Partition,
    pub per_group: Vec<GroupFit>,
    /// Observations inside groups; the normaliser `n` of the total error.
    pub n_covered: usize,
    /// `sqrt(Σ_k (n_k/n) Σ_h e_h²)`.
    pub total_rmse: f64,
    /// `Σ_k (n_k/n) ε_k`, reported alongside because the total above is
    /// not a weighted mean of the group errors.
    pub weighted_mean_rmse: f64,
    pub dates: Vec<NaiveDate>,
    pub observed: Vec<f64>,
    /// Expected rate per observation; `None` on the leftover tail.
    pub fitted_path: Vec<Option<f64>>,
    pub residuals: Vec<Option<f64>>,
}

impl FitReport {
    /// Residual groups in segment order.
    pub fn residual_groups(&self) -> Vec<Vec<f64>> {
        self.per_group
            .iter()
            .map(|g| g.range.slice(&self.residuals).iter().map(|e| e.expect("residual inside a group")).collect())
            .collect()
    }

    /// One row per observation.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["index", "date", "observed", "fitted", "residual", "segment"])?;
        let segment_of = |i: usize| self.per_group.iter().position(|g| g.range.contains(i));
        for i in 0..self.observed.len() {
            out.write_record([
                i.to_string(),
                self.dates[i].format("%Y-%m-%d").to_string(),
                self.observed[i].to_string(),
                opt(self.fitted_path[i]),
                opt(self.residuals[i]),
                segment_of(i).map(|k| k.to_string()).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Joins undersized or invalid segments with their successor (the
/// predecessor for the last segment) until every segment calibrates or a
/// single segment remains.
fn merge_segments(
    model: ModelKind,
    shifted: &[f64],
    partition: &Partition,
    shift: ShiftSpec,
) -> Vec<(IndexRange, CalibrationResult)> {
    let pieces: Vec<Piece> = partition
        .groups
        .iter()
        .map(|g| Piece {
            range: g.range,
            johnson: g.johnson,
        })
        .collect();
    let calibrate_seg = |seg: IndexRange| calibrate_pieces(model, shifted, seg.slice(&pieces), shift);
    let mut segs: Vec<(IndexRange, CalibrationResult)> = (0..pieces.len())
        .map(|k| {
            let seg = IndexRange::new(k, k);
            (seg, calibrate_seg(seg))
        })
        .collect();
    while segs.len() > 1 {
        let Some(bad) = segs.iter().position(|(_, c)| !usable(c)) else {
            break;
        };
        let (a, b) = if bad + 1 < segs.len() { (bad, bad + 1) } else { (bad - 1, bad) };
        let joined = IndexRange::new(segs[a].0.start, segs[b].0.end);
        segs[a] = (joined, calibrate_seg(joined));
        segs.remove(b);
    }
    segs
}

/// Segmented whole-sample fit: shift, forward partition (with Johnson
/// normalisation for the normal kind), per-group calibration under the
/// merge rule, and the one-step expected-rate path of each segment, which
/// starts at the segment's first observation.
pub fn fit_sample(
    series: &RateSeries,
    kind: DistributionKind,
    model: ModelKind,
    cfg: &GofConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    let observed = series.rates();
    let shift = choose_shift(&observed, kind, model)?;
    let shifted = apply_shift(&observed, &shift);
    let partition = forward_partition(&shifted, kind, cfg)?;
    if partition.groups.is_empty() {
        return Err(Error::Pipeline("partition has no groups".into()));
    }
    let segs = merge_segments(model, &shifted, &partition, shift);
    let single = segs.len() == 1;

    let n = observed.len();
    let mut fitted_path = vec![None; n];
    let mut residuals = vec![None; n];
    let mut per_group = Vec::with_capacity(segs.len());
    for (groups, mut calibration) in segs {
        let range = IndexRange::new(
            partition.groups[groups.start].range.start,
            partition.groups[groups.end].range.end,
        );
        if single && !usable(&calibration) {
            calibration.valid = false;
        }
        let mut fallback = false;
        fitted_path[range.start] = Some(observed[range.start]);
        for i in range.start + 1..=range.end {
            let f = one_step(&calibration, shifted[i - 1]).unwrap_or_else(|| {
                fallback = true;
                observed[i - 1]
            });
            fitted_path[i] = Some(f);
        }
        for i in range.start..=range.end {
            residuals[i] = Some(observed[i] - fitted_path[i].expect("set above"));
        }
        let e: Vec<f64> = range.slice(&residuals).iter().map(|e| e.expect("set above")).collect();
        per_group.push(GroupFit {
            range,
            groups,
            calibration,
            epsilon: rmse(&e)?,
            fallback,
        });
    }
    let n_covered = partition.covered();
    let groups: Vec<Vec<f64>> = per_group
        .iter()
        .map(|g| g.range.slice(&residuals).iter().map(|e| e.expect("set above")).collect())
        .collect();
    Ok(FitReport {
        maturity: series.maturity.clone(),
        model,
        kind,
        level: cfg.level,
        shift,
        total_rmse: total_rmse(&groups, n_covered)?,
        weighted_mean_rmse: weighted_mean_rmse(&groups, n_covered)?,
        partition,
        per_group,
        n_covered,
        dates: series.dates(),
        observed,
        fitted_path,
        residuals,
    })
}
