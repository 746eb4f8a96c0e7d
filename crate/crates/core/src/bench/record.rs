use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{summarize, BenchError, ExperimentKind, Summary};
use crate::active_learning::{AlConfig, PhaseChange};
use crate::classifiers::{ClassifierConfig, ClassifierKind};
use crate::detectors::DetectorSpec;
use crate::metrics::MetricSeries;

/// Version of the `runs.jsonl` record layout.
pub const SCHEMA_VERSION: u32 = 1;

const RUNS_FILE: &str = "runs.jsonl";
const TIMINGS_FILE: &str = "timings.csv";

/// The unit of work behind one record, complete enough to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CellConfig {
    Baseline { classifier: ClassifierKind, models: ClassifierConfig },
    Detector { detector: DetectorSpec, grid: Vec<f64> },
    /// Random forest scores thresholded at fixed alert rates.
    RfAlert { models: ClassifierConfig, grid: Vec<f64> },
    ActiveLearning { al: AlConfig },
}

impl CellConfig {
    pub fn name(&self) -> String {
        match self {
            CellConfig::Baseline { classifier, .. } => format!("baseline/{classifier}"),
            CellConfig::Detector { detector, .. } => format!("detector/{}", detector.method()),
            CellConfig::RfAlert { .. } => "detector/rf_alert".to_string(),
            CellConfig::ActiveLearning { al } => format!("al/{}", al.label()),
        }
    }
}

/// Result of one cell at one seed.
///
/// Wall-clock time is kept out of the JSON line so that repeated runs write
/// byte-identical `runs.jsonl`; it is stored in `timings.csv` and joined
/// back on read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub toolkit_version: String,
    pub experiment: ExperimentKind,
    pub cell: CellConfig,
    pub boundary: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undersample_rate: Option<f64>,
    pub seed: u64,
    pub dataset_digest: String,
    pub metrics: BTreeMap<String, f64>,
    pub series: MetricSeries,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<PhaseChange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deviations: Vec<String>,
    #[serde(skip)]
    pub wall_clock_seconds: Option<f64>,
}

impl RunRecord {
    /// Grouping key across seeds: cell name plus any undersampling.
    pub fn key(&self) -> String {
        match self.undersample_rate {
            Some(r) => format!("{}@{}", self.cell.name(), r),
            None => self.cell.name(),
        }
    }
}

/// Writes `runs.jsonl`, `timings.csv` and the summary tables into `dir`.
pub fn write_records(records: &[RunRecord], dir: &Path) -> Result<Summary, BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut lines = String::new();
    let mut timings = String::from("line,cell,seed,wall_clock_seconds\n");
    for (i, r) in records.iter().enumerate() {
        let json = serde_json::to_string(r).map_err(|e| BenchError::Parse {
            path: dir.join(RUNS_FILE),
            line: i + 1,
            message: e.to_string(),
        })?;
        lines.push_str(&json);
        lines.push('\n');
        if let Some(t) = r.wall_clock_seconds {
            let _ = writeln!(timings, "{},{},{},{}", i + 1, r.key(), r.seed, t);
        }
    }
    write(&dir.join(RUNS_FILE), &lines)?;
    write(&dir.join(TIMINGS_FILE), &timings)?;
    let summary = summarize(records);
    for (name, content) in &summary.files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| BenchError::io(parent, e))?;
        }
        write(&path, content)?;
    }
    Ok(summary)
}

fn write(path: &Path, content: &str) -> Result<(), BenchError> {
    fs::write(path, content).map_err(|e| BenchError::io(path, e))
}

/// Reads `runs.jsonl` from `dir`, re-attaching timings when present.
pub fn read_records(dir: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let path = dir.join(RUNS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| BenchError::Parse { path: path.clone(), line: line_no, message: e.to_string() };
        let value: serde_json::Value = serde_json::from_str(line).map_err(parse_err)?;
        let version = value.get("schema_version").and_then(|v| v.as_u64()).ok_or_else(|| BenchError::Parse {
            path: path.clone(),
            line: line_no,
            message: "missing schema_version".into(),
        })?;
        if version != u64::from(SCHEMA_VERSION) {
            return Err(BenchError::SchemaVersionMismatch {
                path: path.clone(),
                line: line_no,
                found: version as u32,
                expected: SCHEMA_VERSION,
            });
        }
        records.push(serde_json::from_value::<RunRecord>(value).map_err(parse_err)?);
    }
    let timings_path = dir.join(TIMINGS_FILE);
    if let Ok(t) = fs::read_to_string(&timings_path) {
        for row in t.lines().skip(1) {
            let mut cols = row.split(',');
            let line = cols.next().and_then(|v| v.parse::<usize>().ok());
            let secs = row.rsplit(',').next().and_then(|v| v.parse::<f64>().ok());
            if let (Some(line), Some(secs)) = (line, secs) {
                if let Some(r) = line.checked_sub(1).and_then(|l| records.get_mut(l)) {
                    r.wall_clock_seconds = Some(secs);
                }
            }
        }
    }
    Ok(records)
}
