use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{canonical_digest, Dataset, DatasetError, Label, TransactionRecord, TxId, MAX_TIME_STEP, N_FEATURES};

pub const FEATURES_FILE: &str = "elliptic_txs_features.csv";
pub const CLASSES_FILE: &str = "elliptic_txs_classes.csv";
pub const EDGES_FILE: &str = "elliptic_txs_edgelist.csv";

/// Locations of the three dataset files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPaths {
    pub features: PathBuf,
    pub classes: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
}

impl DataPaths {
    /// Standard file names under `dir`; the edge list is used only if present.
    pub fn from_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let edges = dir.join(EDGES_FILE);
        Self {
            features: dir.join(FEATURES_FILE),
            classes: dir.join(CLASSES_FILE),
            edges: edges.exists().then_some(edges),
        }
    }

    pub fn exist(&self) -> bool {
        self.features.exists() && self.classes.exists()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounts {
    pub time_step: u32,
    pub illicit: usize,
    pub licit: usize,
    pub unknown: usize,
}

/// Summary emitted by `validate`: class counts, per-step counts, digests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub total: usize,
    pub labeled: usize,
    pub illicit: usize,
    pub licit: usize,
    pub unknown: usize,
    pub per_time_step: Vec<StepCounts>,
    pub source_digest: String,
    /// SHA-256 of each input file's bytes, keyed by role.
    pub file_digests: BTreeMap<String, String>,
}

impl Manifest {
    pub(super) fn from_records(
        records: &[TransactionRecord],
        source_digest: &str,
        file_digests: Option<BTreeMap<String, String>>,
    ) -> Self {
        let mut steps: Vec<StepCounts> = (1..=MAX_TIME_STEP)
            .map(|s| StepCounts { time_step: s, ..Default::default() })
            .collect();
        let (mut illicit, mut licit, mut unknown) = (0, 0, 0);
        for r in records {
            let s = &mut steps[(r.time_step - 1) as usize];
            match r.label {
                Label::Illicit => {
                    illicit += 1;
                    s.illicit += 1;
                }
                Label::Licit => {
                    licit += 1;
                    s.licit += 1;
                }
                Label::Unknown => {
                    unknown += 1;
                    s.unknown += 1;
                }
            }
        }
        steps.retain(|s| s.illicit + s.licit + s.unknown > 0);
        Self {
            total: records.len(),
            labeled: illicit + licit,
            illicit,
            licit,
            unknown,
            per_time_step: steps,
            source_digest: source_digest.to_string(),
            file_digests: file_digests.unwrap_or_default(),
        }
    }
}

pub fn load_dataset(features_path: &Path, classes_path: &Path) -> Result<Dataset, DatasetError> {
    load_dataset_with_edges(&DataPaths {
        features: features_path.to_path_buf(),
        classes: classes_path.to_path_buf(),
        edges: None,
    })
}

pub fn load_dataset_with_edges(paths: &DataPaths) -> Result<Dataset, DatasetError> {
    let features_bytes = read_file(&paths.features)?;
    let classes_bytes = read_file(&paths.classes)?;
    let mut digests = BTreeMap::new();
    digests.insert("features".to_string(), sha256(&features_bytes));
    digests.insert("classes".to_string(), sha256(&classes_bytes));
    if let Some(edges) = &paths.edges {
        let edge_bytes = read_file(edges)?;
        check_edges(edges, &edge_bytes)?;
        digests.insert("edges".to_string(), sha256(&edge_bytes));
    }

    let mut records = parse_features(&paths.features, &features_bytes)?;
    let classes = parse_classes(&paths.classes, &classes_bytes)?;

    records.sort_by_key(|r| r.tx_id);
    for w in records.windows(2) {
        if w[0].tx_id == w[1].tx_id {
            return Err(DatasetError::DuplicateTxId(w[0].tx_id));
        }
    }
    let mut class_map: HashMap<TxId, Label> = HashMap::with_capacity(classes.len());
    for (id, label) in classes {
        if class_map.insert(id, label).is_some() {
            return Err(DatasetError::DuplicateTxId(id));
        }
    }
    for r in &mut records {
        r.label = class_map.remove(&r.tx_id).ok_or(DatasetError::MissingClassRow(r.tx_id))?;
    }
    if let Some(&id) = class_map.keys().min() {
        return Err(DatasetError::DanglingClassRow(id));
    }

    let source_digest = canonical_digest(&records);
    let manifest = Manifest::from_records(&records, &source_digest, Some(digests));
    Ok(Dataset { records, source_digest, manifest })
}

fn read_file(path: &Path) -> Result<Vec<u8>, DatasetError> {
    let mut f = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DatasetError::MissingFile(path.to_path_buf()),
        _ => DatasetError::Io { path: path.to_path_buf(), source: e },
    })?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)
        .map_err(|e| DatasetError::Io { path: path.to_path_buf(), source: e })?;
    Ok(buf)
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn malformed(path: &Path, line: u64, reason: impl Into<String>) -> DatasetError {
    DatasetError::MalformedRow { path: path.to_path_buf(), line, reason: reason.into() }
}

fn csv_reader(bytes: &[u8], headers: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes)
}

fn parse_features(path: &Path, bytes: &[u8]) -> Result<Vec<TransactionRecord>, DatasetError> {
    let mut rdr = csv_reader(bytes, false);
    let mut out = Vec::new();
    let mut rec = csv::ByteRecord::new();
    let mut line = 0u64;
    loop {
        match rdr.read_byte_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(malformed(path, line + 1, e.to_string())),
        }
        line = rec.position().map_or(line + 1, |p| p.line());
        if rec.len() != N_FEATURES + 1 {
            return Err(malformed(path, line, format!("expected {} columns, found {}", N_FEATURES + 1, rec.len())));
        }
        let tx_id = parse_str(&rec[0])
            .and_then(|s| s.parse::<TxId>().ok())
            .ok_or_else(|| malformed(path, line, "tx id is not an unsigned integer"))?;
        let mut features = Vec::with_capacity(N_FEATURES);
        for (j, field) in rec.iter().skip(1).enumerate() {
            let v = parse_str(field)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(path, line, format!("feature {j} is not a finite number")))?;
            features.push(v);
        }
        let step = features[0];
        if step.fract() != 0.0 || step < 1.0 || step > MAX_TIME_STEP as f64 {
            return Err(malformed(path, line, format!("time step {step} outside 1..={MAX_TIME_STEP}")));
        }
        out.push(TransactionRecord { tx_id, time_step: step as u32, features, label: Label::Unknown });
    }
    Ok(out)
}

fn parse_classes(path: &Path, bytes: &[u8]) -> Result<Vec<(TxId, Label)>, DatasetError> {
    let mut rdr = csv_reader(bytes, true);
    let header = rdr.byte_headers().map_err(|e| malformed(path, 1, e.to_string()))?.clone();
    if header.len() != 2 {
        return Err(malformed(path, 1, "classes header must have two columns"));
    }
    let mut out = Vec::new();
    let mut rec = csv::ByteRecord::new();
    let mut line = 1u64;
    loop {
        match rdr.read_byte_record(&mut rec) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(malformed(path, line + 1, e.to_string())),
        }
        line = rec.position().map_or(line + 1, |p| p.line());
        if rec.len() != 2 {
            return Err(malformed(path, line, format!("expected 2 columns, found {}", rec.len())));
        }
        let tx_id = parse_str(&rec[0])
            .and_then(|s| s.parse::<TxId>().ok())
            .ok_or_else(|| malformed(path, line, "tx id is not an unsigned integer"))?;
        let token = String::from_utf8_lossy(&rec[1]).into_owned();
        let label = match token.as_str() {
            "1" => Label::Illicit,
            "2" => Label::Licit,
            "unknown" => Label::Unknown,
            _ => return Err(DatasetError::UnknownClassToken { token, line }),
        };
        out.push((tx_id, label));
    }
    Ok(out)
}

fn check_edges(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let mut rdr = csv_reader(bytes, true);
    let mut rec = csv::ByteRecord::new();
    let mut line = 1u64;
    loop {
        match rdr.read_byte_record(&mut rec) {
            Ok(false) => return Ok(()),
            Ok(true) => {}
            Err(e) => return Err(malformed(path, line + 1, e.to_string())),
        }
        line = rec.position().map_or(line + 1, |p| p.line());
        if rec.len() != 2 {
            return Err(malformed(path, line, format!("expected 2 columns, found {}", rec.len())));
        }
    }
}

fn parse_str(field: &[u8]) -> Option<&str> {
    std::str::from_utf8(field).ok()
}
