//! Property suites checked against independent brute-force oracles.
//!
//! Shared by the `properties` test target and the CLI acceptance report.
//! Every suite runs a fixed number of cases from a fixed RNG seed and
//! returns the first counterexample as an error.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chainsift::active_learning::{
    egl, AlConfig, AlData, AlError, AlSession, HotStrategy, LabelOracle, Phase, WarmupStrategy,
};
use chainsift::classifiers::{
    logistic_gradient, objective, objective_gradient, ClassifierKind, LogisticConfig, LogisticModel,
};
use chainsift::dataset::{Label, TransactionRecord, TxId};
use chainsift::detectors::{abod_scores, knn_scores, lof_scores};
use chainsift::metrics::threshold_at_contamination;
use chainsift::numkit::{Matrix, NeighborIndex};
use proptest::prelude::*;
use proptest::test_runner::{TestCaseError, TestRng, TestRunner};

fn matrix(n: usize, d: usize, values: &[f64]) -> Matrix {
    Matrix::new(n, d, values[..n * d].to_vec()).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Brute-force k nearest rows of `m` to `q` by (distance, index), skipping `skip`.
fn brute_knn(m: &Matrix, q: &[f64], k: usize, skip: Option<usize>) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = (0..m.nrows())
        .filter(|i| Some(*i) != skip)
        .map(|i| (i, dist(m.row(i), q)))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn brute_lof(reference: &Matrix, targets: &Matrix, k: usize) -> Vec<f64> {
    let n = reference.nrows();
    let neigh: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| brute_knn(reference, reference.row(i), k, Some(i)))
        .collect();
    let kdist: Vec<f64> = neigh.iter().map(|v| v.last().unwrap().1).collect();
    let lrd = |nb: &[(usize, f64)]| {
        let reach: f64 = nb.iter().map(|(o, d)| d.max(kdist[*o])).sum::<f64>() / nb.len() as f64;
        1.0 / (reach + 1e-10)
    };
    let ref_lrd: Vec<f64> = neigh.iter().map(|nb| lrd(nb)).collect();
    (0..targets.nrows())
        .map(|t| {
            let nb = brute_knn(reference, targets.row(t), k, None);
            let mean = nb.iter().map(|(o, _)| ref_lrd[*o]).sum::<f64>() / nb.len() as f64;
            mean / lrd(&nb)
        })
        .collect()
}

fn brute_abod(reference: &Matrix, targets: &Matrix, k: usize) -> Vec<f64> {
    (0..targets.nrows())
        .map(|t| {
            let x = targets.row(t);
            let nb = brute_knn(reference, x, k, None);
            let mut vals = Vec::new();
            for a in 0..nb.len() {
                for b in a + 1..nb.len() {
                    let va: Vec<f64> = reference.row(nb[a].0).iter().zip(x).map(|(p, q)| p - q).collect();
                    let vb: Vec<f64> = reference.row(nb[b].0).iter().zip(x).map(|(p, q)| p - q).collect();
                    let na: f64 = va.iter().map(|v| v * v).sum();
                    let nb2: f64 = vb.iter().map(|v| v * v).sum();
                    if na == 0.0 || nb2 == 0.0 {
                        continue;
                    }
                    let dot: f64 = va.iter().zip(&vb).map(|(p, q)| p * q).sum();
                    vals.push(dot / (na * nb2));
                }
            }
            if vals.is_empty() {
                return 0.0;
            }
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            -(vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

fn point_cloud() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
    (25usize..=300, 1usize..=6).prop_flat_map(|(n, d)| {
        (
            Just(n),
            Just(d),
            prop::collection::vec(-10.0f64..10.0, n * d),
            prop::collection::vec(-12.0f64..12.0, 10 * d),
        )
    })
}

pub const NEIGHBOUR_CASES: u32 = 48;
pub const ORACLE_CASES: u32 = 48;
pub const THRESHOLD_CASES: u32 = 2000;
pub const GRADIENT_CASES: u32 = 1000;
pub const EGL_CASES: u32 = 1000;
pub const POOL_PARTITION_CASES: u32 = 10_000;

/// Tolerances pinned for the oracle comparisons.
pub const ORACLE_TOL: f64 = 1e-8;
pub const GRADIENT_REL_TOL: f64 = 1e-5;
pub const EGL_TOL: f64 = 1e-10;

fn runner(cases: u32) -> TestRunner {
    let config = ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

pub fn neighbour_index() -> Result<(), String> {
    run(
        NEIGHBOUR_CASES,
        (point_cloud(), 1usize..12, any::<bool>()),
        |((n, d, pts, qs), k, grid)| {
            // Optional snapping to a coarse grid creates many exact ties.
            let pts: Vec<f64> = if grid {
                pts.iter().map(|v| v.round()).collect()
            } else {
                pts
            };
            let m = matrix(n, d, &pts);
            let index = NeighborIndex::new(m.clone());
            for q in qs.chunks(d) {
                let got: Vec<(usize, f64)> = index
                    .query(q, k)
                    .unwrap()
                    .items
                    .iter()
                    .map(|x| (x.id, x.distance))
                    .collect();
                let want = brute_knn(&m, q, k, None);
                prop_assert_eq!(
                    got.iter().map(|x| x.0).collect::<Vec<_>>(),
                    want.iter().map(|x| x.0).collect::<Vec<_>>()
                );
            }
            for i in (0..n).step_by(7) {
                let got: Vec<usize> = index.query_member(i, k).unwrap().items.iter().map(|x| x.id).collect();
                let want: Vec<usize> = brute_knn(&m, m.row(i), k, Some(i)).iter().map(|x| x.0).collect();
                prop_assert_eq!(got, want);
            }
            Ok(())
        },
    )
}

pub fn detector_oracles() -> Result<(), String> {
    run(ORACLE_CASES, (point_cloud(),), |((n, d, pts, qs),)| {
        let reference = matrix(n, d, &pts);
        let targets = Matrix::new(qs.len() / d, d, qs).unwrap();
        let k_knn = 5;
        let knn = knn_scores(&reference, &targets, k_knn).unwrap();
        let want: Vec<f64> = (0..targets.nrows())
            .map(|t| brute_knn(&reference, targets.row(t), k_knn, None)[k_knn - 1].1)
            .collect();
        prop_assert!(close(&knn, &want, ORACLE_TOL), "knn {:?} vs {:?}", knn, want);

        let k_lof = 20.min(n - 1);
        let lof = lof_scores(&reference, &targets, k_lof).unwrap();
        let want = brute_lof(&reference, &targets, k_lof);
        prop_assert!(close(&lof, &want, ORACLE_TOL), "lof {:?} vs {:?}", lof, want);

        let abod = abod_scores(&reference, &targets, 10).unwrap();
        let want = brute_abod(&reference, &targets, 10);
        prop_assert!(close(&abod, &want, ORACLE_TOL), "abod {:?} vs {:?}", abod, want);
        Ok(())
    })
}

pub fn contamination_thresholds() -> Result<(), String> {
    run(
        THRESHOLD_CASES,
        (
            prop::collection::vec(prop_oneof![-5.0f64..5.0, Just(0.0), Just(1.0)], 0..200),
            0.0f64..=1.0,
            0.0f64..=1.0,
        ),
        |(scores, c1, c2)| {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let n = scores.len();
            let a = threshold_at_contamination(&scores, lo);
            let b = threshold_at_contamination(&scores, hi);
            let expect = |c: f64| ((c * n as f64) + 1e-9).floor() as usize;
            prop_assert_eq!(a.iter().filter(|&&v| v == 1).count(), expect(lo));
            prop_assert_eq!(b.iter().filter(|&&v| v == 1).count(), expect(hi));
            for i in 0..n {
                prop_assert!(a[i] <= b[i], "flag at {} not nested", i);
                for j in 0..n {
                    if a[i] == 1 && a[j] == 0 {
                        // Every flagged score outranks every unflagged one; ties go to the lower index.
                        prop_assert!(scores[i] > scores[j] || (scores[i] == scores[j] && i < j));
                    }
                }
            }
            Ok(())
        },
    )
}

pub fn lr_gradient() -> Result<(), String> {
    run(
        GRADIENT_CASES,
        (
            1usize..12,
            1usize..6,
            prop::collection::vec(-2.0f64..2.0, 12 * 6 + 6 + 1),
            prop::collection::vec(0u8..=1, 12),
            0.0f64..3.0,
        ),
        |(n, d, raw, labels, l2)| {
            let x = Matrix::new(n, d, raw[..n * d].to_vec()).unwrap();
            let y = &labels[..n];
            let w = raw[n * d..n * d + d].to_vec();
            let b = raw[raw.len() - 1];
            let g = objective_gradient(&w, b, &x, y, l2);
            let h = 1e-6;
            let mut fd = Vec::with_capacity(d + 1);
            for j in 0..=d {
                let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
                if j < d {
                    wp[j] += h;
                    wm[j] -= h;
                } else {
                    bp += h;
                    bm -= h;
                }
                fd.push((objective(&wp, bp, &x, y, l2) - objective(&wm, bm, &x, y, l2)) / (2.0 * h));
            }
            let diff = g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            prop_assert!(
                diff <= GRADIENT_REL_TOL * norm.max(1e-3),
                "relative error {} (|g| = {})",
                diff / norm.max(1e-3),
                norm
            );
            Ok(())
        },
    )
}

pub fn egl_closed_form() -> Result<(), String> {
    run(
        EGL_CASES,
        (
            prop::collection::vec(-3.0f64..3.0, 1..8),
            prop::collection::vec(-5.0f64..5.0, 8),
            -3.0f64..3.0,
        ),
        |(w, raw_x, b)| {
            let d = w.len();
            let x = &raw_x[..d];
            let model = LogisticModel {
                weights: w,
                bias: b,
                config: LogisticConfig::default(),
            };
            // Definition: expectation of the gradient norm under the model's own label distribution.
            let p1 = model.score(x);
            let norm = |g: Vec<f64>| g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let definitional =
                p1 * norm(logistic_gradient(&model, x, 1)) + (1.0 - p1) * norm(logistic_gradient(&model, x, 0));
            prop_assert!(
                (egl(&model, x) - definitional).abs() <= EGL_TOL,
                "{} vs {}",
                egl(&model, x),
                definitional
            );
            Ok(())
        },
    )
}

pub fn pool_partition() -> Result<(), String> {
    run(
        POOL_PARTITION_CASES,
        (
            4usize..40,
            1usize..10,
            0.0f64..=1.0,
            any::<u64>(),
            prop::sample::select(WarmupStrategy::ALL.to_vec()),
            prop::sample::select(HotStrategy::ALL.to_vec()),
            any::<u64>(),
            prop::collection::vec(op(), 1..25),
        ),
        |(n, batch, stop_frac, mask, warmup, hot, seed, ops)| {
            let batch = batch.min(n);
            let stop = batch + ((n - batch) as f64 * stop_frac) as usize;
            let records = pool(n, mask);
            let data = AlData::new(&records, &pool(16, 0x5A5A));
            let oracle = LabelOracle::simulated(&data);
            let cfg = AlConfig {
                batch_size: batch,
                stop_at: stop,
                warmup,
                hot,
                classifier: ClassifierKind::Lr,
                seed,
                eval_every: 1,
                models: Default::default(),
            };
            let mut s = AlSession::new(cfg, &data).unwrap();
            let mut ever_pending: BTreeSet<TxId> = BTreeSet::new();
            let mut completed = 0usize;
            let mut last_phase = Phase::Initial;
            for op in ops {
                let pending: Vec<TxId> = s.pending().iter().map(|p| p.tx_id).collect();
                let before = serde_json::to_string(&s).unwrap();
                match op {
                    Op::Select => match s.select_batch(&data) {
                        Ok(items) => {
                            prop_assert!(pending.is_empty());
                            prop_assert!(!items.is_empty() && items.len() <= batch);
                            for it in items {
                                prop_assert!(ever_pending.insert(it.tx_id), "{} queried twice", it.tx_id);
                            }
                        }
                        Err(AlError::BatchPending(_)) => prop_assert!(!pending.is_empty()),
                        Err(AlError::StopReached(_)) | Err(AlError::PoolExhausted) => prop_assert!(s.is_finished()),
                        Err(e) => prop_assert!(false, "select failed: {e}"),
                    },
                    Op::Answer => {
                        let a = oracle.answer(&pending).unwrap();
                        match s.submit_labels(&data, &a) {
                            Ok(out) => {
                                completed += 1;
                                prop_assert_eq!(out.labeled, (completed * batch).min(stop));
                            }
                            Err(AlError::NoPendingBatch) => prop_assert!(pending.is_empty()),
                            Err(e) => prop_assert!(false, "submit failed: {e}"),
                        }
                    }
                    Op::AnswerMissing | Op::AnswerExtra | Op::AnswerForeign => {
                        let mut a: BTreeMap<TxId, Label> = oracle.answer(&pending).unwrap();
                        match op {
                            Op::AnswerMissing => {
                                a.pop_first();
                            }
                            Op::AnswerExtra => {
                                if let Some(id) = s
                                    .labeled()
                                    .keys()
                                    .next()
                                    .copied()
                                    .or_else(|| s.unlabeled().iter().next().copied())
                                {
                                    a.insert(id, Label::Licit);
                                }
                            }
                            _ => {
                                a.insert(2, Label::Illicit);
                            }
                        }
                        // Submit only if the mutation actually changed the answers.
                        if a != oracle.answer(&pending).unwrap() || pending.is_empty() {
                            prop_assert!(s.submit_labels(&data, &a).is_err(), "bad answers accepted");
                        }
                        prop_assert_eq!(serde_json::to_string(&s).unwrap(), before);
                    }
                    Op::Checkpoint => {
                        s = serde_json::from_str(&before).unwrap();
                    }
                }
                prop_assert!(s.check_invariants(&data).is_ok(), "{:?}", s.check_invariants(&data));
                prop_assert!(s.phase() >= last_phase, "phase regressed");
                last_phase = s.phase();
                prop_assert_eq!(s.labeled().len(), (completed * batch).min(stop));
            }
            Ok(())
        },
    )
}

#[derive(Debug, Clone)]
enum Op {
    Select,
    Answer,
    AnswerMissing,
    AnswerExtra,
    AnswerForeign,
    Checkpoint,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => Just(Op::Select),
        4 => Just(Op::Answer),
        1 => Just(Op::AnswerMissing),
        1 => Just(Op::AnswerExtra),
        1 => Just(Op::AnswerForeign),
        1 => Just(Op::Checkpoint),
    ]
}

fn pool(n: usize, illicit_mask: u64) -> Vec<TransactionRecord> {
    (0..n)
        .map(|i| {
            let illicit = illicit_mask >> (i % 64) & 1 == 1;
            let s = if illicit { 1.5 } else { 0.0 };
            let f = i as f64;
            TransactionRecord {
                tx_id: 3 * i as u64 + 1,
                time_step: 1,
                features: vec![s + (f * 0.37).sin(), s + (f * 0.73).cos(), (f * 1.31).sin()],
                label: if illicit { Label::Illicit } else { Label::Licit },
            }
        })
        .collect()
}

fn written_files(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

/// Runs a baseline, anomaly and active-learning experiment twice on the same
/// synthetic data and compares every written file byte for byte.
pub fn seed_determinism() -> Result<(), String> {
    use chainsift::bench::{run_experiment, write_records, ExperimentConfig, ExperimentKind};
    use chainsift::dataset::synthetic::{generate, SyntheticConfig};
    use chainsift::detectors::{DetectorSpec, Method};

    let ds = generate(&SyntheticConfig {
        n_transactions: 2500,
        seed: 17,
        ..SyntheticConfig::default()
    });
    let mut base = ExperimentConfig::new(ExperimentKind::Baselines);
    base.seeds = vec![1, 2];
    base.baselines.models.forest.n_trees = 10;
    base.baselines.models.boosted.n_rounds = 10;
    let mut anomaly = ExperimentConfig::new(ExperimentKind::AnomalyBench);
    anomaly.seeds = vec![3];
    anomaly.anomaly.detectors = Method::BENCHMARK
        .iter()
        .map(|m| DetectorSpec::with_defaults(*m, 0))
        .collect();
    anomaly.anomaly.models.forest.n_trees = 10;
    let mut al = ExperimentConfig::new(ExperimentKind::AlSweep);
    al.seeds = vec![4];
    al.al.stop_at = 150;
    al.al.warmup = WarmupStrategy::ALL.to_vec();
    al.al.hot = HotStrategy::ALL.to_vec();
    al.al.models.forest.n_trees = 10;

    let run_all = || -> Result<BTreeMap<String, Vec<u8>>, String> {
        let mut records = Vec::new();
        for cfg in [&base, &anomaly, &al] {
            records.extend(run_experiment(cfg, &ds).map_err(|e| e.to_string())?);
        }
        for r in &mut records {
            r.wall_clock_seconds = None;
        }
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        write_records(&records, dir.path()).map_err(|e| e.to_string())?;
        Ok(written_files(dir.path()))
    };
    let first = run_all()?;
    let second = run_all()?;
    if first.is_empty() {
        return Err("no files written".into());
    }
    for (name, bytes) in &first {
        if second.get(name) != Some(bytes) {
            return Err(format!("{name} differs between identical runs"));
        }
    }
    if first.len() != second.len() {
        return Err("file sets differ between identical runs".into());
    }
    Ok(())
}
