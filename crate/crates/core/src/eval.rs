//! Synaptic partner evaluation: one-to-one matching of predicted and
//! ground-truth pairs under a distance tolerance and segment agreement,
//! with precision, recall and f-score.

use serde::Serialize;

use crate::annotation::SynapticPartnerAnnotation;
use crate::error::{Error, Result};
use crate::extract::CandidateSynapse;
use crate::geometry::{point_distance, Point3};
use crate::hungarian::{hungarian_assign, CostMatrix};
use crate::volume::{Label, SegmentationVolume};

/// Tolerance used by the CLI when none is given.
pub const DEFAULT_TOLERANCE_NM: f64 = 400.0;

/// A pre/post location pair with an identifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartnerPair {
    pub id: u64,
    pub pre: Point3,
    pub post: Point3,
}

impl From<&SynapticPartnerAnnotation> for PartnerPair {
    fn from(a: &SynapticPartnerAnnotation) -> Self {
        Self { id: a.id, pre: a.pre_location, post: a.post_location }
    }
}

impl PartnerPair {
    /// Extracted candidates, numbered by position.
    pub fn from_candidates(c: &[CandidateSynapse]) -> Vec<PartnerPair> {
        c.iter()
            .enumerate()
            .map(|(i, c)| PartnerPair { id: i as u64, pre: c.pre_location, post: c.post_location })
            .collect()
    }
}

/// How the tolerance applies to a pair of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceMode {
    /// Each endpoint within `d` of its counterpart.
    #[default]
    PerEndpoint,
    /// Sum of the two endpoint distances within `d`.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchingConstraint {
    pub tolerance_nm: f64,
    pub require_segment_match: bool,
    pub mode: ToleranceMode,
}

impl MatchingConstraint {
    pub fn new(tolerance_nm: f64) -> Result<Self> {
        if tolerance_nm.is_nan() || tolerance_nm < 0.0 {
            return Err(Error::Parameter(format!("tolerance must be >= 0, got {tolerance_nm}")));
        }
        Ok(Self { tolerance_nm, require_segment_match: true, mode: ToleranceMode::PerEndpoint })
    }
}

impl Default for MatchingConstraint {
    fn default() -> Self {
        Self::new(DEFAULT_TOLERANCE_NM).unwrap()
    }
}

fn segment(seg: &SegmentationVolume, p: Point3) -> Option<Label> {
    seg.label_at(p).ok()
}

/// Matching cost if `pred` may be matched to `gt`.
pub fn match_cost(pred: &PartnerPair, gt: &PartnerPair, seg: &SegmentationVolume, c: &MatchingConstraint) -> Option<f64> {
    let d_pre = point_distance(pred.pre, gt.pre);
    let d_post = point_distance(pred.post, gt.post);
    let within = match c.mode {
        ToleranceMode::PerEndpoint => d_pre <= c.tolerance_nm && d_post <= c.tolerance_nm,
        ToleranceMode::Sum => d_pre + d_post <= c.tolerance_nm,
    };
    if !within {
        return None;
    }
    if c.require_segment_match {
        let same = |a: Point3, b: Point3| matches!((segment(seg, a), segment(seg, b)), (Some(x), Some(y)) if x == y);
        if !same(pred.pre, gt.pre) || !same(pred.post, gt.post) {
            return None;
        }
    }
    Some(d_pre + d_post)
}

pub fn feasible(pred: &PartnerPair, gt: &PartnerPair, seg: &SegmentationVolume, c: &MatchingConstraint) -> bool {
    match_cost(pred, gt, seg, c).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Match {
    pub predicted_id: u64,
    pub ground_truth_id: u64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    pub matches: Vec<Match>,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl EvalReport {
    /// Report from counts alone; empty denominators give precision/recall 1.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
        Self { tp, fp, fn_, precision, recall, fscore: f_score(precision, recall), matches: Vec::new() }
    }
}

pub fn evaluate(
    predicted: &[PartnerPair],
    ground_truth: &[PartnerPair],
    seg: &SegmentationVolume,
    c: &MatchingConstraint,
) -> EvalReport {
    let cost = CostMatrix::from_fn(predicted.len(), ground_truth.len(), |i, j| {
        match_cost(&predicted[i], &ground_truth[j], seg, c)
    });
    let assignment = hungarian_assign(&cost);
    let tp = assignment.len();
    let mut report = EvalReport::from_counts(tp, predicted.len() - tp, ground_truth.len() - tp);
    report.matches = assignment
        .pairs
        .iter()
        .map(|&(i, j)| Match {
            predicted_id: predicted[i].id,
            ground_truth_id: ground_truth[j].id,
            cost: cost.get(i, j).unwrap(),
        })
        .collect();
    report
}

/// Averages over several evaluated volumes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub n_reports: usize,
    /// Unweighted mean of per-report f-scores.
    pub mean_fscore: f64,
    pub total_tp: usize,
    pub total_fp: usize,
    pub total_fn: usize,
    pub mean_fp: f64,
    pub mean_fn: f64,
}

pub fn aggregate_reports(reports: &[EvalReport]) -> Result<ReportSummary> {
    if reports.is_empty() {
        return Err(Error::Parameter("cannot aggregate an empty list of reports".into()));
    }
    let n = reports.len() as f64;
    let total_tp = reports.iter().map(|r| r.tp).sum();
    let total_fp: usize = reports.iter().map(|r| r.fp).sum();
    let total_fn: usize = reports.iter().map(|r| r.fn_).sum();
    Ok(ReportSummary {
        n_reports: reports.len(),
        mean_fscore: reports.iter().map(|r| r.fscore).sum::<f64>() / n,
        total_tp,
        total_fp,
        total_fn,
        mean_fp: total_fp as f64 / n,
        mean_fn: total_fn as f64 / n,
    })
}
