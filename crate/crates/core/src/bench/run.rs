use std::collections::BTreeMap;
use std::time::Instant;

use super::record::SCHEMA_VERSION;
use super::{BenchError, CellConfig, ExperimentConfig, ExperimentKind, RunRecord};
use crate::active_learning::{run_simulated, AlData, WarmupStrategy};
use crate::classifiers::{predict_labels, train, ClassifierKind};
use crate::dataset::{temporal_split, undersample_illicit, Dataset, DatasetSplit};
use crate::detectors::fit_score;
use crate::metrics::{contamination_sweep, illicit_f1, per_timestep_f1, MetricSeries};
use crate::{par, VERSION};

/// Temporal split, undersampled with `seed` when a rate is given.
pub fn prepare_split(
    dataset: &Dataset,
    boundary: u32,
    undersample_rate: Option<f64>,
    seed: u64,
) -> Result<DatasetSplit, BenchError> {
    let split = temporal_split(dataset, boundary)?;
    Ok(match undersample_rate {
        Some(rate) => undersample_illicit(&split, rate, seed)?,
        None => split,
    })
}

struct CellOutput {
    series: MetricSeries,
    metrics: BTreeMap<String, f64>,
    annotations: Vec<crate::active_learning::PhaseChange>,
    deviations: Vec<String>,
}

fn sweep_metrics(series: &MetricSeries) -> BTreeMap<String, f64> {
    series.points.iter().map(|p| (format!("f1@{}", p.x), p.f1)).collect()
}

fn execute(cell: &CellConfig, split: &DatasetSplit, seed: u64) -> Result<CellOutput, BenchError> {
    match cell {
        CellConfig::Baseline { classifier, models } => {
            let (x, y) = split.train_xy();
            let (tx, ty) = split.test_xy();
            let model = train(*classifier, &x, &y, models, seed)?;
            let preds = predict_labels(&model.predict_scores(&tx)?);
            let report = illicit_f1(&ty, &preds)?;
            let series = per_timestep_f1(&ty, &preds, &split.test_time_steps())?;
            let metrics = BTreeMap::from([
                ("f1".to_string(), report.f1),
                ("precision".to_string(), report.precision),
                ("recall".to_string(), report.recall),
            ]);
            Ok(CellOutput { series, metrics, annotations: Vec::new(), deviations: Vec::new() })
        }
        CellConfig::Detector { detector, grid } => {
            let (x, _) = split.train_xy();
            let (tx, ty) = split.test_xy();
            let spec = detector.clone().with_seed(seed);
            let scored = fit_score(&spec, &x, &tx)?;
            let series = contamination_sweep(&scored.scores, &ty, grid)?;
            Ok(CellOutput { metrics: sweep_metrics(&series), series, annotations: Vec::new(), deviations: scored.deviations })
        }
        CellConfig::RfAlert { models, grid } => {
            let (x, y) = split.train_xy();
            let (tx, ty) = split.test_xy();
            let model = train(ClassifierKind::Rf, &x, &y, models, seed)?;
            let series = contamination_sweep(&model.predict_scores(&tx)?, &ty, grid)?;
            Ok(CellOutput { metrics: sweep_metrics(&series), series, annotations: Vec::new(), deviations: Vec::new() })
        }
        CellConfig::ActiveLearning { al } => {
            let data = AlData::from_split(split);
            let mut cfg = al.clone();
            cfg.seed = seed;
            let run = run_simulated(&cfg, &data)?;
            let mut metrics = BTreeMap::new();
            if let Some(last) = run.history.last() {
                metrics.insert("final_f1".to_string(), last.f1);
                metrics.insert("final_pool".to_string(), last.x as f64);
            }
            if let Some(hot) = run.annotations.iter().find(|a| a.to == crate::active_learning::Phase::Hot) {
                metrics.insert("hot_at".to_string(), hot.pool_size as f64);
            }
            let mut deviations = Vec::new();
            if cfg.warmup == WarmupStrategy::Elliptic {
                deviations.push("elliptic warm-up covariance regularised with ridge 1e-3".to_string());
            }
            Ok(CellOutput { series: run.history, metrics, annotations: run.annotations, deviations })
        }
    }
}

/// Runs one cell on a prepared split and wraps the result in a record.
pub fn run_cell(
    experiment: ExperimentKind,
    cell: &CellConfig,
    boundary: u32,
    undersample_rate: Option<f64>,
    seed: u64,
    split: &DatasetSplit,
    dataset_digest: &str,
) -> Result<RunRecord, BenchError> {
    let start = Instant::now();
    let out = execute(cell, split, seed)?;
    log::info!("{} seed {} finished in {:.1}s", cell.name(), seed, start.elapsed().as_secs_f64());
    Ok(RunRecord {
        schema_version: SCHEMA_VERSION,
        toolkit_version: VERSION.to_string(),
        experiment,
        cell: cell.clone(),
        boundary,
        undersample_rate,
        seed,
        dataset_digest: dataset_digest.to_string(),
        metrics: out.metrics,
        series: out.series,
        annotations: out.annotations,
        deviations: out.deviations,
        wall_clock_seconds: Some(start.elapsed().as_secs_f64()),
    })
}

fn run_grid(cfg: &ExperimentConfig, dataset: &Dataset, cells: Vec<CellConfig>) -> Result<Vec<RunRecord>, BenchError> {
    cfg.validate()?;
    // One split per seed (they differ only when undersampling).
    let splits = par::try_map_range(cfg.seeds.len(), |i| {
        let seed = if cfg.undersample_rate.is_some() { cfg.seeds[i] } else { 0 };
        prepare_split(dataset, cfg.boundary, cfg.undersample_rate, seed)
    })?;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..cfg.seeds.len()).map(move |s| (c, s))).collect();
    par::try_map_range(jobs.len(), |j| {
        let (c, s) = jobs[j];
        run_cell(cfg.kind, &cells[c], cfg.boundary, cfg.undersample_rate, cfg.seeds[s], &splits[s], &dataset.source_digest)
    })
}

pub fn run_baselines(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<Vec<RunRecord>, BenchError> {
    let cells = cfg
        .baselines
        .classifiers
        .iter()
        .map(|k| CellConfig::Baseline { classifier: *k, models: cfg.baselines.models.clone() })
        .collect();
    run_grid(cfg, dataset, cells)
}

pub fn run_anomaly_bench(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<Vec<RunRecord>, BenchError> {
    let grid = cfg.anomaly.effective_grid();
    let mut cells: Vec<CellConfig> = cfg
        .anomaly
        .detectors
        .iter()
        .map(|d| CellConfig::Detector { detector: d.clone(), grid: grid.clone() })
        .collect();
    if cfg.anomaly.include_rf {
        cells.push(CellConfig::RfAlert { models: cfg.anomaly.models.clone(), grid });
    }
    run_grid(cfg, dataset, cells)
}

pub fn run_al_sweep(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<Vec<RunRecord>, BenchError> {
    // The seed inside each AlConfig is replaced per run; keep it at 0 in the
    // cell so records of one setup share a key.
    let cells = cfg.al.configs(0).into_iter().map(|al| CellConfig::ActiveLearning { al }).collect();
    run_grid(cfg, dataset, cells)
}

pub fn run_experiment(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<Vec<RunRecord>, BenchError> {
    match cfg.kind {
        ExperimentKind::Baselines => run_baselines(cfg, dataset),
        ExperimentKind::AnomalyBench => run_anomaly_bench(cfg, dataset),
        ExperimentKind::AlSweep => run_al_sweep(cfg, dataset),
    }
}

/// Regenerates a record from its embedded cell config and seed.
pub fn rerun(record: &RunRecord, dataset: &Dataset) -> Result<RunRecord, BenchError> {
    if record.dataset_digest != dataset.source_digest {
        return Err(BenchError::DigestMismatch {
            expected: record.dataset_digest.clone(),
            found: dataset.source_digest.clone(),
        });
    }
    let seed = if record.undersample_rate.is_some() { record.seed } else { 0 };
    let split = prepare_split(dataset, record.boundary, record.undersample_rate, seed)?;
    run_cell(record.experiment, &record.cell, record.boundary, record.undersample_rate, record.seed, &split, &record.dataset_digest)
}

