//! `chainsift` command-line entry point.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 data error,
//! 3 runtime failure.

mod overrides;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use chainsift::bench::{
    prepare_split, read_records, run_experiment, write_records, BenchError, CellConfig, ExperimentConfig,
    ExperimentKind, RunRecord,
};
use chainsift::classifiers::ClassifierKind;
use chainsift::dataset::{load_dataset_with_edges, temporal_split, Dataset, DatasetSplit, Label, DEFAULT_BOUNDARY};
use chainsift_service::{AppState, DatasetEntry, DEFAULT_PORT};

/// Default illicit share for `undersample-report`.
const DEFAULT_REPORT_RATE: f64 = 0.005;

#[derive(Parser)]
#[command(name = "chainsift", version, about = "Illicit-transaction detection experiments on Elliptic-format data")]
struct Cli {
    /// Worker threads for parallel cells (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// Feature file (elliptic_txs_features.csv).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Class file (elliptic_txs_classes.csv).
    #[arg(long)]
    classes: Option<PathBuf>,
    /// Edge list; only its digest is recorded.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Directory holding the three files under their standard names.
    #[arg(long, env = "CHAINSIFT_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DataArgs,
    /// JSON experiment config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for runs.jsonl and summary tables.
    #[arg(long)]
    output: PathBuf,
    /// Dotted-path config override, e.g. `seeds=7` or `al.warmup=random,iforest`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Record per-cell wall-clock times in timings.csv (makes it differ between runs).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load the dataset and print its manifest.
    Validate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_BOUNDARY)]
        boundary: u32,
        /// Also write manifest.json here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Supervised baselines (LR, RF, GBT).
    Baseline(ExperimentArgs),
    /// Unsupervised detectors across contamination levels.
    Anomaly(ExperimentArgs),
    /// Active-learning sweep.
    Al(ExperimentArgs),
    /// Active learning under illicit undersampling versus random sampling.
    UndersampleReport(ExperimentArgs),
    /// Run the HTTP session service.
    Serve {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = DEFAULT_BOUNDARY)]
        boundary: u32,
        /// Name the dataset is served under.
        #[arg(long, default_value = "elliptic")]
        name: String,
        /// Output directory of a baseline run; its RF mean F1 is shown next to learning curves.
        #[arg(long)]
        baseline_runs: Option<PathBuf>,
        /// Session checkpoints are kept here; without it sessions live in memory only.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(m) => CliError::Config(m),
            BenchError::Dataset(_)
            | BenchError::Parse { .. }
            | BenchError::SchemaVersionMismatch { .. }
            | BenchError::DigestMismatch { .. } => CliError::Data(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Validate { data, boundary, output } => validate(&data, boundary, output.as_deref()),
        Command::Baseline(args) => experiment(ExperimentKind::Baselines, &args),
        Command::Anomaly(args) => experiment(ExperimentKind::AnomalyBench, &args),
        Command::Al(args) => experiment(ExperimentKind::AlSweep, &args),
        Command::UndersampleReport(args) => undersample_report(&args),
        Command::Serve { data, port, host, boundary, name, baseline_runs, output } => {
            serve(&data, (host, port).into(), boundary, &name, baseline_runs.as_deref(), output)
        }
    }
}

/// Flags take precedence over the config's `data` section, which takes
/// precedence over `--data-dir` / `CHAINSIFT_DATA_DIR`.
fn load(flags: &DataArgs, config: Option<&chainsift::bench::DataConfig>) -> Result<Dataset, CliError> {
    let mut data = config.cloned().unwrap_or_default();
    if flags.features.is_some() {
        data.features = flags.features.clone();
    }
    if flags.classes.is_some() {
        data.classes = flags.classes.clone();
    }
    if flags.edges.is_some() {
        data.edges = flags.edges.clone();
    }
    let paths = data.resolve(flags.data_dir.as_deref()).ok_or_else(|| {
        CliError::Config("no dataset given: pass --features and --classes, --data-dir, or set CHAINSIFT_DATA_DIR".into())
    })?;
    log::info!("loading {}", paths.features.display());
    load_dataset_with_edges(&paths).map_err(|e| CliError::Data(e.to_string()))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, content).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn validate(flags: &DataArgs, boundary: u32, output: Option<&Path>) -> Result<(), CliError> {
    let ds = load(flags, None)?;
    let m = &ds.manifest;
    println!("total       {}", m.total);
    println!("labeled     {}", m.labeled);
    println!("illicit     {}", m.illicit);
    println!("licit       {}", m.licit);
    println!("unknown     {}", m.unknown);
    println!("digest      {}", m.source_digest);
    let split = temporal_split(&ds, boundary).map_err(|e| CliError::Data(e.to_string()))?;
    println!("boundary    {boundary}");
    println!("train       {} labeled ({} illicit)", split.train.len(), count_illicit(&split.train));
    println!("test        {} labeled ({} illicit)", split.test.len(), count_illicit(&split.test));
    if let Some(dir) = output {
        let json = serde_json::to_string_pretty(m).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_file(&dir.join("manifest.json"), &(json + "\n"))?;
    }
    Ok(())
}

fn count_illicit(side: &[chainsift::dataset::TransactionRecord]) -> usize {
    side.iter().filter(|r| r.label == Label::Illicit).count()
}

fn kind_name(kind: ExperimentKind) -> String {
    serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// Reads the config (or the kind's defaults), fills defaults, applies
/// overrides and validates.
fn resolve_config(kind: ExperimentKind, args: &ExperimentArgs, base: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    let cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            let mut value: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if let Value::Object(map) = &mut value {
                map.entry("kind").or_insert_with(|| Value::String(kind_name(kind)));
            }
            serde_json::from_value::<ExperimentConfig>(value)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => base,
    };
    if cfg.kind != kind {
        return Err(CliError::Config(format!(
            "config is for {:?} experiments, this subcommand runs {:?}",
            kind_name(cfg.kind),
            kind_name(kind)
        )));
    }
    let mut value = serde_json::to_value(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    overrides::apply(&mut value, &args.overrides).map_err(CliError::Config)?;
    let cfg: ExperimentConfig = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.kind != kind {
        return Err(CliError::Config("kind cannot be overridden".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_and_write(cfg: &ExperimentConfig, ds: &Dataset, args: &ExperimentArgs) -> Result<Vec<RunRecord>, CliError> {
    let mut records = run_experiment(cfg, ds)?;
    if !args.timings {
        records.iter_mut().for_each(|r| r.wall_clock_seconds = None);
    }
    let json = serde_json::to_string_pretty(cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&args.output.join("config.json"), &(json + "\n"))?;
    let summary = write_records(&records, &args.output)?;
    println!("{} runs written to {}", records.len(), args.output.display());
    for name in summary.files.keys() {
        println!("  {name}");
    }
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    Ok(records)
}

fn experiment(kind: ExperimentKind, args: &ExperimentArgs) -> Result<(), CliError> {
    let cfg = resolve_config(kind, args, ExperimentConfig::new(kind))?;
    let ds = load(&args.data, Some(&cfg.data))?;
    run_and_write(&cfg, &ds, args)?;
    Ok(())
}

fn report_defaults() -> ExperimentConfig {
    use chainsift::active_learning::{HotStrategy, WarmupStrategy};
    let mut cfg = ExperimentConfig::new(ExperimentKind::AlSweep);
    cfg.undersample_rate = Some(DEFAULT_REPORT_RATE);
    cfg.al.warmup = vec![WarmupStrategy::Random];
    cfg.al.hot = vec![HotStrategy::None, HotStrategy::Uncertainty];
    cfg.al.classifier = vec![ClassifierKind::Rf];
    cfg
}

fn undersample_report(args: &ExperimentArgs) -> Result<(), CliError> {
    let cfg = resolve_config(ExperimentKind::AlSweep, args, report_defaults())?;
    let Some(rate) = cfg.undersample_rate else {
        return Err(CliError::Config("undersample-report needs undersample_rate".into()));
    };
    let ds = load(&args.data, Some(&cfg.data))?;
    let full = temporal_split(&ds, cfg.boundary).map_err(|e| CliError::Data(e.to_string()))?;
    let mut table = String::from("seed,side,licit,illicit_before,illicit_after,illicit_rate_after\n");
    for &seed in &cfg.seeds {
        let reduced = prepare_split(&ds, cfg.boundary, Some(rate), seed)?;
        split_rows(&mut table, seed, &full, &reduced);
    }
    write_file(&args.output.join("split.csv"), &table)?;
    run_and_write(&cfg, &ds, args)?;
    if let Ok(vs) = std::fs::read_to_string(args.output.join("vs_random.csv")) {
        print!("{vs}");
    }
    Ok(())
}

fn split_rows(out: &mut String, seed: u64, full: &DatasetSplit, reduced: &DatasetSplit) {
    for (side, before, after) in [("train", &full.train, &reduced.train), ("test", &full.test, &reduced.test)] {
        let licit = after.len() - count_illicit(after);
        let _ = writeln!(
            out,
            "{seed},{side},{licit},{},{},{}",
            count_illicit(before),
            count_illicit(after),
            DatasetSplit::illicit_rate(after)
        );
    }
}

/// Mean F1 of the RF baseline runs in `dir` that match the dataset and boundary.
fn baseline_f1(dir: &Path, ds: &Dataset, boundary: u32) -> Result<Option<f64>, CliError> {
    let records = read_records(dir)?;
    let f1: Vec<f64> = records
        .iter()
        .filter(|r| matches!(r.cell, CellConfig::Baseline { classifier: ClassifierKind::Rf, .. }))
        .filter(|r| r.dataset_digest == ds.source_digest && r.boundary == boundary && r.undersample_rate.is_none())
        .filter_map(|r| r.metrics.get("f1").copied())
        .collect();
    if f1.is_empty() {
        log::warn!("no matching RF baseline runs in {}", dir.display());
        return Ok(None);
    }
    Ok(Some(f1.iter().sum::<f64>() / f1.len() as f64))
}

fn serve(
    flags: &DataArgs,
    addr: std::net::SocketAddr,
    boundary: u32,
    name: &str,
    baseline_runs: Option<&Path>,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let ds = load(flags, None)?;
    let baseline = match baseline_runs {
        Some(dir) => baseline_f1(dir, &ds, boundary)?,
        None => None,
    };
    let entry = DatasetEntry::from_dataset(name, &ds, boundary)
        .map_err(|e| CliError::Data(e.to_string()))?
        .with_baseline_f1(baseline);
    drop(ds);
    let state = AppState::new(vec![entry], output);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime
        .block_on(chainsift_service::serve(state, addr))
        .map_err(|e| CliError::Runtime(format!("server on {addr}: {e}")))
}
