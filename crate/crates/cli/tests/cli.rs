use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Duration;

use chainsift::dataset::synthetic::{generate_records, write_files, SyntheticConfig};

fn data_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let records = generate_records(&SyntheticConfig { n_transactions: 2000, seed: 3, ..Default::default() });
    write_files(dir.path(), &records).unwrap();
    dir
}

/// Runs the binary from an empty working directory without the data-dir
/// variable set.
fn chainsift(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chainsift"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CHAINSIFT_DATA_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn features(dir: &Path) -> String {
    dir.join("elliptic_txs_features.csv").display().to_string()
}

fn classes(dir: &Path) -> String {
    dir.join("elliptic_txs_classes.csv").display().to_string()
}

#[test]
fn validate_prints_manifest_and_reports_missing_files() {
    let data = data_dir();
    let cwd = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = chainsift(
        &["validate", "--features", &features(data.path()), "--classes", &classes(data.path()), "--output", out.path().to_str().unwrap()],
        cwd.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("total       2000"), "{text}");
    assert!(text.contains("boundary    34"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["total"], 2000);

    let missing = data.path().join("nope.csv");
    let o = chainsift(&["validate", "--features", missing.to_str().unwrap(), "--classes", &classes(data.path())], cwd.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(missing.to_str().unwrap()), "{}", stderr(&o));

    let o = Command::new(env!("CARGO_BIN_EXE_chainsift"))
        .args(["validate"])
        .current_dir(cwd.path())
        .env("CHAINSIFT_DATA_DIR", data.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("total       2000"));
    assert!(snapshot(cwd.path()).is_empty());
}

#[test]
fn config_errors_exit_with_one() {
    let data = data_dir();
    let cwd = tempfile::tempdir().unwrap();
    let dir = data.path().to_str().unwrap().to_string();
    let out = cwd.path().join("out");
    let out = out.to_str().unwrap();
    let cfg = cwd.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kind": "baselines"}"#).unwrap();
    let bad_json = cwd.path().join("bad.json");
    std::fs::write(&bad_json, "{").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["al", "--output", out],
        vec!["al", "--data-dir", &dir, "--output", out, "--bogus"],
        vec!["al", "--data-dir", &dir, "--output", out, "--override", "al.nonexistent=3"],
        vec!["al", "--data-dir", &dir, "--output", out, "--override", "seeds="],
        vec!["al", "--data-dir", &dir, "--output", out, "--config", cfg.to_str().unwrap()],
        vec!["al", "--data-dir", &dir, "--output", out, "--config", bad_json.to_str().unwrap()],
        vec!["anomaly", "--data-dir", &dir, "--output", out, "--override", "anomaly.grid=0.2,0.1"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = chainsift(&args, cwd.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    assert!(!Path::new(out).exists());
}

#[test]
fn al_override_runs_single_seed_and_is_reproducible() {
    let data = data_dir();
    let before = snapshot(data.path());
    let cwd = tempfile::tempdir().unwrap();
    let cfg = cwd.path().join("al.json");
    std::fs::write(&cfg, r#"{"kind": "al_sweep", "al": {"stop_at": 100, "models": {"forest": {"n_trees": 10}}}}"#)
        .unwrap();
    let run = |name: &str| {
        let out = cwd.path().join(name);
        let o = chainsift(
            &[
                "al",
                "--data-dir",
                data.path().to_str().unwrap(),
                "--config",
                cfg.to_str().unwrap(),
                "--override",
                "seeds=7",
                "--output",
                out.to_str().unwrap(),
                "--jobs",
                "2",
            ],
            cwd.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        snapshot(&out)
    };
    let first = run("a");
    let second = run("b");
    assert_eq!(first, second);
    let runs = String::from_utf8(first[Path::new("runs.jsonl")].clone()).unwrap();
    assert_eq!(runs.lines().count(), 1);
    let rec: serde_json::Value = serde_json::from_str(runs.lines().next().unwrap()).unwrap();
    assert_eq!(rec["seed"], 7);
    assert!(first.contains_key(Path::new("table2.csv")));
    assert_eq!(first[Path::new("timings.csv")], b"line,cell,seed,wall_clock_seconds\n");
    assert_eq!(snapshot(data.path()), before);
    let mut top: Vec<_> = std::fs::read_dir(cwd.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    top.sort();
    assert_eq!(top, ["a", "al.json", "b"]);
}

#[test]
fn baseline_and_undersample_report() {
    let data = data_dir();
    let cwd = tempfile::tempdir().unwrap();
    let out = cwd.path().join("base");
    let o = chainsift(
        &[
            "baseline",
            "--features",
            &features(data.path()),
            "--classes",
            &classes(data.path()),
            "--override",
            "seeds=1,2",
            "--override",
            "baselines.models.forest.n_trees=10",
            "--override",
            "baselines.models.boosted.n_rounds=10",
            "--output",
            out.to_str().unwrap(),
        ],
        cwd.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let baselines = std::fs::read_to_string(out.join("baselines.csv")).unwrap();
    assert_eq!(baselines.lines().count(), 4, "{baselines}");

    let report = cwd.path().join("report");
    let o = chainsift(
        &[
            "undersample-report",
            "--data-dir",
            data.path().to_str().unwrap(),
            "--override",
            "undersample_rate=0.05",
            "--override",
            "seeds=1,2",
            "--override",
            "al.stop_at=150",
            "--override",
            "al.models.forest.n_trees=10",
            "--output",
            report.to_str().unwrap(),
        ],
        cwd.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let split = std::fs::read_to_string(report.join("split.csv")).unwrap();
    assert_eq!(split.lines().count(), 5);
    for line in split.lines().skip(1) {
        let rate: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((rate - 0.05).abs() < 0.01, "{line}");
    }
    let vs = std::fs::read_to_string(report.join("vs_random.csv")).unwrap();
    assert!(vs.lines().nth(1).unwrap().starts_with("al/rf/random/uncertainty@0.05,al/rf/random/none@0.05,150,"));
    assert!(stdout(&o).contains("vs_random") || stdout(&o).contains("setup,reference"));
}

#[test]
fn serve_answers_over_http() {
    let data = data_dir();
    let cwd = tempfile::tempdir().unwrap();
    let state = cwd.path().join("state");
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_chainsift"))
        .args([
            "serve",
            "--data-dir",
            data.path().to_str().unwrap(),
            "--port",
            &port.to_string(),
            "--name",
            "synthetic",
            "--output",
            state.to_str().unwrap(),
        ])
        .current_dir(cwd.path())
        .env("RUST_LOG", "warn")
        .spawn()
        .unwrap();
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let result = rt.block_on(async {
        let client = reqwest::Client::new();
        let base = format!("http://127.0.0.1:{port}");
        let mut datasets = None;
        for _ in 0..200 {
            if let Ok(resp) = client.get(format!("{base}/api/datasets")).send().await {
                datasets = Some(resp.json::<serde_json::Value>().await.unwrap());
                break;
            }
            tokio::time::sleep(Duration::from_millis(50)).await;
        }
        let created = client
            .post(format!("{base}/api/sessions"))
            .json(&serde_json::json!({ "dataset": "synthetic", "config": { "stop_at": 100 } }))
            .send()
            .await
            .unwrap();
        (datasets, created.status().as_u16())
    });
    let _ = child.kill();
    let _ = child.wait();
    let (datasets, created) = result;
    assert_eq!(datasets.expect("server came up")[0]["name"], "synthetic");
    assert_eq!(created, 201);
    assert_eq!(std::fs::read_dir(state.join("sessions")).unwrap().count(), 1);
}
