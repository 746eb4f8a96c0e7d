use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{CellConfig, RunRecord};
use crate::active_learning::{AlConfig, HotStrategy, WarmupStrategy};
use crate::metrics::{aggregate_runs, percentile, MetricSeries};

/// Summary tables derived from a record set. `files` maps relative paths to
/// CSV contents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub files: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn file_stem(key: &str) -> String {
    key.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

/// Builds every summary file. The output depends only on the set of
/// records, not their order.
pub fn summarize(records: &[RunRecord]) -> Summary {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.key().cmp(&b.key()).then(a.seed.cmp(&b.seed)));
    let mut groups: BTreeMap<String, Vec<&RunRecord>> = BTreeMap::new();
    for r in sorted {
        groups.entry(r.key()).or_default().push(r);
    }

    let mut out = Summary::default();
    let digests: BTreeSet<&str> = records.iter().map(|r| r.dataset_digest.as_str()).collect();
    if digests.len() > 1 {
        out.warnings.push(format!(
            "records come from {} different datasets: {}",
            digests.len(),
            digests.into_iter().collect::<Vec<_>>().join(", ")
        ));
    }

    let mut baselines = String::from("cell,runs,mean_f1,median_f1,min_f1,max_f1\n");
    let mut table1_rows = Vec::new();
    let mut table1_grid: BTreeSet<u64> = BTreeSet::new();
    let mut table2 = String::from("setup,runs,pool_size,mean_f1,median_f1,band_lo,band_hi\n");
    let (mut has_baselines, mut has_table1, mut has_table2) = (false, false, false);

    for (key, group) in &groups {
        let series: Vec<MetricSeries> = group.iter().map(|r| r.series.clone()).collect();
        match aggregate_runs(&series) {
            Ok(agg) => {
                out.files.insert(format!("curves/{}.csv", file_stem(key)), agg.to_csv());
                match &group[0].cell {
                    CellConfig::Detector { .. } | CellConfig::RfAlert { .. } => {
                        has_table1 = true;
                        table1_grid.extend(agg.points.iter().map(|p| p.x));
                        table1_rows.push((key.clone(), group.len(), agg));
                    }
                    CellConfig::ActiveLearning { .. } => {
                        has_table2 = true;
                        for p in &agg.points {
                            let _ = writeln!(
                                table2,
                                "{},{},{},{},{},{},{}",
                                key, agg.runs, p.x, p.mean_f1, p.median_f1, p.band_lo, p.band_hi
                            );
                        }
                    }
                    CellConfig::Baseline { .. } => {}
                }
            }
            Err(e) => out.warnings.push(format!("{key}: runs not aggregated ({e})")),
        }
        if let CellConfig::Baseline { .. } = group[0].cell {
            has_baselines = true;
            let f1: Vec<f64> = group.iter().filter_map(|r| r.metrics.get("f1").copied()).collect();
            if !f1.is_empty() {
                let lo = f1.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = f1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let _ = writeln!(baselines, "{},{},{},{},{},{}", key, f1.len(), mean(&f1), percentile(&f1, 50.0), lo, hi);
            }
        }
    }

    if has_baselines {
        out.files.insert("baselines.csv".into(), baselines);
    }
    if has_table1 {
        let grid: Vec<u64> = table1_grid.into_iter().collect();
        let mut t = String::from("method,runs");
        for x in &grid {
            let _ = write!(t, ",mean_f1@{x},median_f1@{x}");
        }
        t.push('\n');
        for (key, runs, agg) in &table1_rows {
            let _ = write!(t, "{key},{runs}");
            for x in &grid {
                match agg.at(*x) {
                    Some(p) => {
                        let _ = write!(t, ",{},{}", p.mean_f1, p.median_f1);
                    }
                    None => t.push_str(",,"),
                }
            }
            t.push('\n');
        }
        out.files.insert("table1.csv".into(), t);
    }
    if has_table2 {
        out.files.insert("table2.csv".into(), table2);
    }
    if let Some(t) = vs_random(&groups) {
        out.files.insert("vs_random.csv".into(), t);
    }
    if !out.warnings.is_empty() {
        out.files.insert("warnings.txt".into(), out.warnings.join("\n") + "\n");
    }
    out
}

/// Median over runs of the F1 at each run's last evaluated pool size.
/// `None` when there are no points or the runs stop at different sizes.
pub fn final_f1_median<'a>(runs: impl IntoIterator<Item = &'a RunRecord>) -> Option<(u64, f64)> {
    let mut pool = None;
    let mut f1 = Vec::new();
    for r in runs {
        let last = r.series.last()?;
        if *pool.get_or_insert(last.x) != last.x {
            return None;
        }
        f1.push(last.f1);
    }
    pool.map(|x| (x, percentile(&f1, 50.0)))
}

/// Each active-learning setup against pure random sampling (random warm-up,
/// no hot strategy) with the same classifier and undersampling.
fn vs_random(groups: &BTreeMap<String, Vec<&RunRecord>>) -> Option<String> {
    let mut t = String::from("setup,reference,pool_size,median_f1,reference_median_f1,gap\n");
    let mut any = false;
    for (key, group) in groups {
        let CellConfig::ActiveLearning { al } = &group[0].cell else { continue };
        if al.hot == HotStrategy::None {
            continue;
        }
        let reference = RunRecord {
            cell: CellConfig::ActiveLearning {
                al: AlConfig { warmup: WarmupStrategy::Random, hot: HotStrategy::None, ..al.clone() },
            },
            ..group[0].clone()
        }
        .key();
        let Some(ref_group) = groups.get(&reference) else { continue };
        let (Some((x, f1)), Some((rx, rf1))) =
            (final_f1_median(group.iter().copied()), final_f1_median(ref_group.iter().copied()))
        else {
            continue;
        };
        if x != rx {
            continue;
        }
        any = true;
        let _ = writeln!(t, "{key},{reference},{x},{f1},{rf1},{}", f1 - rf1);
    }
    any.then_some(t)
}
