//! Illicit-class evaluation: F1, fixed-alert-rate thresholds, per-step
//! series and aggregation across seeds.
//!
//! Precision and recall use the 0/0 -> 0 convention throughout.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("runs do not share the same x grid")]
    GridMismatch,
    #[error("invalid contamination grid value {0}")]
    InvalidGrid(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub counts: ConfusionCounts,
}

/// F1 with illicit (1) as the positive class.
pub fn illicit_f1(labels: &[u8], preds: &[u8]) -> Result<F1Report, MetricsError> {
    if labels.len() != preds.len() {
        return Err(MetricsError::LengthMismatch(labels.len(), preds.len()));
    }
    if labels.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut c = ConfusionCounts::default();
    for (&y, &p) in labels.iter().zip(preds) {
        match (y != 0, p != 0) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(F1Report { f1: c.f1(), precision: c.precision(), recall: c.recall(), counts: c })
}

/// Number of alerts at contamination `c` over `n` instances: `floor(c * n)`.
///
/// A 1e-9 guard absorbs binary representation error (e.g. `0.29 * 100`).
pub fn alert_count(c: f64, n: usize) -> usize {
    let c = c.clamp(0.0, 1.0);
    ((c * n as f64 + 1e-9).floor() as usize).min(n)
}

/// Flags the `floor(c * N)` highest scores; ties go to the lower index.
pub fn threshold_at_contamination(scores: &[f64], c: f64) -> Vec<u8> {
    let m = alert_count(c, scores.len());
    let mut preds = vec![0u8; scores.len()];
    for i in ranked_desc(scores).into_iter().take(m) {
        preds[i] = 1;
    }
    preds
}

/// Indices ordered by descending score, ascending index on ties.
pub fn ranked_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XMeaning {
    TimeStep,
    LabeledPoolSize,
    ContaminationPct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub x: u64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    /// Set when the point had neither actual nor predicted positives.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

impl MetricPoint {
    pub fn from_report(x: u64, r: &F1Report) -> Self {
        Self {
            x,
            f1: r.f1,
            precision: r.precision,
            recall: r.recall,
            degenerate: r.counts.tp + r.counts.fp + r.counts.fn_ == 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub x_meaning: XMeaning,
    pub points: Vec<MetricPoint>,
}

impl MetricSeries {
    pub fn new(x_meaning: XMeaning) -> Self {
        Self { x_meaning, points: Vec::new() }
    }

    pub fn at(&self, x: u64) -> Option<&MetricPoint> {
        self.points.iter().find(|p| p.x == x)
    }

    pub fn last(&self) -> Option<&MetricPoint> {
        self.points.last()
    }

    /// Single-run CSV with a zero-width band.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,f1,precision,recall,band_lo,band_hi\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{},{},{},{},{}", p.x, p.f1, p.precision, p.recall, p.f1, p.f1);
        }
        s
    }
}

/// Contamination expressed as an integer percent for the series x axis.
pub fn contamination_pct(c: f64) -> u64 {
    (c * 100.0).round() as u64
}

/// Illicit F1 at each contamination level of `grid` (x = percent).
pub fn contamination_sweep(scores: &[f64], labels: &[u8], grid: &[f64]) -> Result<MetricSeries, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(scores.len(), labels.len()));
    }
    let mut series = MetricSeries::new(XMeaning::ContaminationPct);
    let order = ranked_desc(scores);
    let mut last_x = None;
    for &c in grid {
        if !(0.0..=1.0).contains(&c) {
            return Err(MetricsError::InvalidGrid(c));
        }
        let x = contamination_pct(c);
        if last_x.is_some_and(|l| x <= l) {
            return Err(MetricsError::InvalidGrid(c));
        }
        last_x = Some(x);
        let mut preds = vec![0u8; scores.len()];
        for &i in order.iter().take(alert_count(c, scores.len())) {
            preds[i] = 1;
        }
        let r = illicit_f1(labels, &preds)?;
        series.points.push(MetricPoint::from_report(x, &r));
    }
    Ok(series)
}

/// One F1 point per distinct time step, ascending.
pub fn per_timestep_f1(labels: &[u8], preds: &[u8], time_steps: &[u32]) -> Result<MetricSeries, MetricsError> {
    if labels.len() != preds.len() {
        return Err(MetricsError::LengthMismatch(labels.len(), preds.len()));
    }
    if labels.len() != time_steps.len() {
        return Err(MetricsError::LengthMismatch(labels.len(), time_steps.len()));
    }
    let mut groups: BTreeMap<u32, (Vec<u8>, Vec<u8>)> = BTreeMap::new();
    for ((&y, &p), &t) in labels.iter().zip(preds).zip(time_steps) {
        let g = groups.entry(t).or_default();
        g.0.push(y);
        g.1.push(p);
    }
    let mut series = MetricSeries::new(XMeaning::TimeStep);
    for (t, (y, p)) in groups {
        let r = illicit_f1(&y, &p)?;
        series.points.push(MetricPoint::from_report(t as u64, &r));
    }
    Ok(series)
}

/// Percentile with linear interpolation between order statistics
/// (rank `p/100 * (n-1)`).
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (rank - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedPoint {
    pub x: u64,
    pub median_f1: f64,
    pub mean_f1: f64,
    pub median_precision: f64,
    pub median_recall: f64,
    pub band_lo: f64,
    pub band_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedSeries {
    pub x_meaning: XMeaning,
    pub runs: usize,
    pub points: Vec<AggregatedPoint>,
}

impl AggregatedSeries {
    pub fn at(&self, x: u64) -> Option<&AggregatedPoint> {
        self.points.iter().find(|p| p.x == x)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,f1,precision,recall,band_lo,band_hi\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                p.x, p.median_f1, p.median_precision, p.median_recall, p.band_lo, p.band_hi
            );
        }
        s
    }
}

/// Pointwise median and 2.5/97.5 percentile band across runs.
pub fn aggregate_runs(runs: &[MetricSeries]) -> Result<AggregatedSeries, MetricsError> {
    let first = runs.first().ok_or(MetricsError::EmptyInput)?;
    for r in runs {
        if r.x_meaning != first.x_meaning
            || r.points.len() != first.points.len()
            || r.points.iter().zip(&first.points).any(|(a, b)| a.x != b.x)
        {
            return Err(MetricsError::GridMismatch);
        }
    }
    let points = (0..first.points.len())
        .map(|i| {
            let col = |f: fn(&MetricPoint) -> f64| runs.iter().map(|r| f(&r.points[i])).collect::<Vec<_>>();
            let f1 = col(|p| p.f1);
            AggregatedPoint {
                x: first.points[i].x,
                median_f1: percentile(&f1, 50.0),
                mean_f1: f1.iter().sum::<f64>() / f1.len() as f64,
                median_precision: percentile(&col(|p| p.precision), 50.0),
                median_recall: percentile(&col(|p| p.recall), 50.0),
                band_lo: percentile(&f1, 2.5),
                band_hi: percentile(&f1, 97.5),
            }
        })
        .collect();
    Ok(AggregatedSeries { x_meaning: first.x_meaning, runs: runs.len(), points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_degenerate() {
        let y = [1, 0, 1, 0];
        assert_eq!(illicit_f1(&y, &y).unwrap().f1, 1.0);
        let r = illicit_f1(&y, &[0, 0, 0, 0]).unwrap();
        assert_eq!((r.f1, r.precision, r.recall), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_enumerated_cells() {
        // tp: idx0, fn: idx1, fp: idx2, tn: idx3
        let r = illicit_f1(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(r.counts, ConfusionCounts { tp: 1, fp: 1, tn: 1, fn_: 1 });
        assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn f1_errors() {
        assert_eq!(illicit_f1(&[1], &[1, 0]), Err(MetricsError::LengthMismatch(1, 2)));
        assert_eq!(illicit_f1(&[], &[]), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn contamination_examples() {
        let s = [0.9, 0.1, 0.5, 0.5, 0.2];
        assert_eq!(threshold_at_contamination(&s, 0.0), vec![0; 5]);
        assert_eq!(threshold_at_contamination(&s, 1.0), vec![1; 5]);
        assert_eq!(threshold_at_contamination(&s, 0.4), vec![1, 0, 1, 0, 0]);
        assert_eq!(alert_count(0.29, 100), 29);
        assert_eq!(alert_count(0.15, 20), 3);
    }

    #[test]
    fn per_step_examples() {
        let single = per_timestep_f1(&[1, 0, 1], &[1, 1, 0], &[40, 40, 40]).unwrap();
        assert_eq!(single.points.len(), 1);
        assert_eq!(single.points[0].f1, illicit_f1(&[1, 0, 1], &[1, 1, 0]).unwrap().f1);

        let two = per_timestep_f1(&[1, 0, 1, 0], &[1, 0, 0, 1], &[36, 36, 35, 35]).unwrap();
        let f1s: Vec<f64> = two.points.iter().map(|p| p.f1).collect();
        let xs: Vec<u64> = two.points.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![35, 36]);
        assert_eq!(f1s, vec![0.0, 1.0]);

        let empty_step = per_timestep_f1(&[0, 0], &[0, 0], &[44, 44]).unwrap();
        assert!(empty_step.points[0].degenerate);
        assert_eq!(empty_step.points[0].f1, 0.0);
    }

    fn series(f1s: &[f64]) -> MetricSeries {
        MetricSeries {
            x_meaning: XMeaning::LabeledPoolSize,
            points: f1s
                .iter()
                .enumerate()
                .map(|(i, &f1)| MetricPoint { x: 50 * (i as u64 + 1), f1, precision: f1, recall: f1, degenerate: false })
                .collect(),
        }
    }

    #[test]
    fn aggregation() {
        let same: Vec<MetricSeries> = (0..5).map(|_| series(&[0.4, 0.6])).collect();
        let a = aggregate_runs(&same).unwrap();
        assert!(a.points.iter().all(|p| p.band_hi - p.band_lo == 0.0));

        let runs: Vec<MetricSeries> = [0.3, 0.1, 0.5, 0.2, 0.4].iter().map(|&v| series(&[v])).collect();
        let a = aggregate_runs(&runs).unwrap();
        let p = &a.points[0];
        assert!((p.median_f1 - 0.3).abs() < 1e-12);
        // Sorted {0.1..0.5}; rank 0.025*4 = 0.1 -> 0.1 + 0.1*0.1; rank 0.975*4 = 3.9 -> 0.4 + 0.9*0.1.
        assert!((p.band_lo - 0.11).abs() < 1e-12);
        assert!((p.band_hi - 0.49).abs() < 1e-12);
        assert!((p.mean_f1 - 0.3).abs() < 1e-12);

        let mismatched = vec![series(&[0.1]), series(&[0.1, 0.2])];
        assert_eq!(aggregate_runs(&mismatched), Err(MetricsError::GridMismatch));
    }

    #[test]
    fn sweep_validates_grid() {
        let s = [0.9, 0.1];
        let y = [1, 0];
        let out = contamination_sweep(&s, &y, &[0.05, 0.5, 1.0]).unwrap();
        assert_eq!(out.points.iter().map(|p| p.x).collect::<Vec<_>>(), vec![5, 50, 100]);
        assert_eq!(out.points[1].f1, 1.0);
        assert!(matches!(contamination_sweep(&s, &y, &[1.5]), Err(MetricsError::InvalidGrid(_))));
        assert!(matches!(contamination_sweep(&s, &y, &[0.5, 0.1]), Err(MetricsError::InvalidGrid(_))));
    }
}
