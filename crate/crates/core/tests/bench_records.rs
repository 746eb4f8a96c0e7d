use std::fs;

use chainsift::bench::{
    final_f1_median, read_records, rerun, run_experiment, summarize, write_records, BenchError, ExperimentConfig, ExperimentKind,
};
use chainsift::dataset::synthetic::{generate, SyntheticConfig};
use chainsift::active_learning::HotStrategy;
use chainsift::dataset::Dataset;
use chainsift::detectors::{DetectorSpec, Method};

fn dataset() -> Dataset {
    generate(&SyntheticConfig { n_transactions: 3000, seed: 11, ..SyntheticConfig::default() })
}

fn small_baselines() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Baselines);
    cfg.seeds = vec![1, 2];
    cfg.baselines.models.forest.n_trees = 15;
    cfg.baselines.models.boosted.n_rounds = 15;
    cfg
}

#[test]
fn write_read_round_trip_and_byte_identical_reruns() {
    let ds = dataset();
    let cfg = small_baselines();
    let a = run_experiment(&cfg, &ds).unwrap();
    assert_eq!(a.len(), 6);
    let dir = tempfile::tempdir().unwrap();
    write_records(&a, dir.path()).unwrap();
    let back = read_records(dir.path()).unwrap();
    assert_eq!(back, a);

    let b = run_experiment(&cfg, &ds).unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    write_records(&b, dir2.path()).unwrap();
    for f in ["runs.jsonl", "baselines.csv"] {
        assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(dir2.path().join(f)).unwrap(), "{f}");
    }
    assert!(dir.path().join("curves/baseline_rf.csv").exists());

    for r in &a {
        let again = rerun(r, &ds).unwrap();
        assert_eq!(again.series, r.series);
        assert_eq!(again.metrics, r.metrics);
    }
}

#[test]
fn corrupted_line_and_schema_errors_name_the_line() {
    let ds = dataset();
    let mut cfg = small_baselines();
    cfg.seeds = vec![3];
    cfg.baselines.classifiers = vec![chainsift::classifiers::ClassifierKind::Lr];
    let recs = run_experiment(&cfg, &ds).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_records(&[recs[0].clone(), recs[0].clone()], dir.path()).unwrap();
    let path = dir.path().join("runs.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();

    lines[1] = lines[1][..lines[1].len() / 2].to_string();
    fs::write(&path, lines.join("\n")).unwrap();
    match read_records(dir.path()) {
        Err(BenchError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected parse error, got {other:?}"),
    }

    lines[1] = lines[0].replace("\"schema_version\":1", "\"schema_version\":7");
    fs::write(&path, lines.join("\n")).unwrap();
    match read_records(dir.path()) {
        Err(BenchError::SchemaVersionMismatch { line, found, .. }) => assert_eq!((line, found), (2, 7)),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn summaries_are_order_independent_and_flag_mixed_digests() {
    let ds = dataset();
    let recs = run_experiment(&small_baselines(), &ds).unwrap();
    let mut reversed = recs.clone();
    reversed.reverse();
    assert_eq!(summarize(&recs), summarize(&reversed));
    assert!(summarize(&recs).warnings.is_empty());

    let mut mixed = recs.clone();
    mixed[0].dataset_digest = "0".repeat(64);
    let s = summarize(&mixed);
    assert_eq!(s.warnings.len(), 1);
    assert!(s.warnings[0].contains("2 different datasets"));

    // A record cannot be rerun against another dataset.
    let other = generate(&SyntheticConfig { n_transactions: 3000, seed: 12, ..SyntheticConfig::default() });
    assert!(matches!(rerun(&recs[0], &other), Err(BenchError::DigestMismatch { .. })));
}

#[test]
fn anomaly_and_al_experiments_produce_tables() {
    let ds = dataset();
    let mut cfg = ExperimentConfig::new(ExperimentKind::AnomalyBench);
    cfg.seeds = vec![1];
    cfg.anomaly.detectors = vec![DetectorSpec::with_defaults(Method::Knn, 0), DetectorSpec::with_defaults(Method::Pca, 0)];
    cfg.anomaly.models.forest.n_trees = 20;
    let mut recs = run_experiment(&cfg, &ds).unwrap();
    assert_eq!(recs.len(), 3);
    for r in &recs {
        let xs: Vec<u64> = r.series.points.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![5, 10, 15, 20]);
    }

    let mut al = ExperimentConfig::new(ExperimentKind::AlSweep);
    al.seeds = vec![1, 2];
    al.al.stop_at = 200;
    al.al.models.forest.n_trees = 10;
    al.al.hot = vec![HotStrategy::None, HotStrategy::Uncertainty];
    recs.extend(run_experiment(&al, &ds).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let summary = write_records(&recs, dir.path()).unwrap();
    assert!(summary.warnings.is_empty(), "{:?}", summary.warnings);
    let t1 = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    assert!(t1.starts_with("method,runs,mean_f1@5,median_f1@5"));
    assert_eq!(t1.lines().count(), 4);
    let t2 = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    assert!(t2.lines().any(|l| l.starts_with("al/rf/random/uncertainty,2,50,")));

    let al_recs: Vec<_> = recs.iter().filter(|r| r.key() == "al/rf/random/uncertainty").collect();
    let ref_recs: Vec<_> = recs.iter().filter(|r| r.key() == "al/rf/random/none").collect();
    let (x, f1) = final_f1_median(al_recs.iter().copied()).unwrap();
    let (rx, rf1) = final_f1_median(ref_recs.iter().copied()).unwrap();
    assert_eq!((x, rx), (200, 200));
    let vs = fs::read_to_string(dir.path().join("vs_random.csv")).unwrap();
    assert_eq!(
        vs.lines().nth(1).unwrap(),
        format!("al/rf/random/uncertainty,al/rf/random/none,200,{f1},{rf1},{}", f1 - rf1)
    );
}

#[test]
fn empty_grid_is_rejected_before_work() {
    let ds = dataset();
    let mut cfg = ExperimentConfig::new(ExperimentKind::AnomalyBench);
    cfg.anomaly.grid.clear();
    assert!(matches!(run_experiment(&cfg, &ds), Err(BenchError::Config(_))));
}
