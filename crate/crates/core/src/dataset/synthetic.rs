//! Synthetic Elliptic-format data for tests, demos and benchmarks.
//!
//! Licit transactions are standard normal in every non-time feature. Illicit
//! ones carry a moderate mean shift on a block of features, so they sit
//! inside the licit cloud rather than far away from it. After
//! `regime_change_step` the illicit block moves to different features,
//! which degrades any model trained on earlier steps.

use std::io::Write;
use std::path::Path;

use super::load::{CLASSES_FILE, EDGES_FILE, FEATURES_FILE};
use super::{Dataset, Label, TransactionRecord, MAX_TIME_STEP, N_FEATURES};
use crate::numkit::SeededRng;

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub n_transactions: usize,
    pub illicit_rate: f64,
    pub licit_rate: f64,
    pub shift: f64,
    pub signal_features: usize,
    pub regime_change_step: u32,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_transactions: 5_000,
            illicit_rate: 0.02,
            licit_rate: 0.21,
            shift: 1.5,
            signal_features: 12,
            regime_change_step: 43,
            seed: 0,
        }
    }
}

fn normal(rng: &mut SeededRng) -> f64 {
    let u1 = 1.0 - rng.uniform();
    let u2 = rng.uniform();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn generate_records(cfg: &SyntheticConfig) -> Vec<TransactionRecord> {
    let mut rng = SeededRng::new(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_transactions);
    for i in 0..cfg.n_transactions {
        let step = 1 + (i as u32 * MAX_TIME_STEP) / cfg.n_transactions.max(1) as u32;
        let u = rng.uniform();
        let label = if u < cfg.illicit_rate {
            Label::Illicit
        } else if u < cfg.illicit_rate + cfg.licit_rate {
            Label::Licit
        } else {
            Label::Unknown
        };
        let mut features = Vec::with_capacity(N_FEATURES);
        features.push(step as f64);
        for _ in 1..N_FEATURES {
            features.push(normal(&mut rng));
        }
        if label == Label::Illicit {
            let start = if step > cfg.regime_change_step { 1 + cfg.signal_features } else { 1 };
            for f in &mut features[start..start + cfg.signal_features] {
                *f += cfg.shift;
            }
        }
        // Round so the CSV text round-trips exactly.
        for f in &mut features[1..] {
            *f = (*f * 1e6).round() / 1e6;
        }
        out.push(TransactionRecord { tx_id: 100_000 + 7 * i as u64, time_step: step, features, label });
    }
    out
}

pub fn generate(cfg: &SyntheticConfig) -> Dataset {
    Dataset::from_records(generate_records(cfg)).expect("generated records are valid")
}

/// Writes the three dataset files under `dir` in the published layout.
pub fn write_files(dir: &Path, records: &[TransactionRecord]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(FEATURES_FILE))?);
    for r in records {
        write!(f, "{}", r.tx_id)?;
        for (j, v) in r.features.iter().enumerate() {
            if j == 0 {
                write!(f, ",{}", r.time_step)?;
            } else {
                write!(f, ",{v}")?;
            }
        }
        writeln!(f)?;
    }
    f.flush()?;
    let mut c = std::io::BufWriter::new(std::fs::File::create(dir.join(CLASSES_FILE))?);
    writeln!(c, "txId,class")?;
    for r in records {
        let token = match r.label {
            Label::Illicit => "1",
            Label::Licit => "2",
            Label::Unknown => "unknown",
        };
        writeln!(c, "{},{token}", r.tx_id)?;
    }
    c.flush()?;
    let mut e = std::io::BufWriter::new(std::fs::File::create(dir.join(EDGES_FILE))?);
    writeln!(e, "txId1,txId2")?;
    for w in records.windows(2).step_by(3) {
        writeln!(e, "{},{}", w[0].tx_id, w[1].tx_id)?;
    }
    e.flush()
}
