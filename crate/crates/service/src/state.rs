//! Shared server state: loaded datasets, live sessions and checkpoints.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use chainsift::active_learning::{AlData, AlSession};
use chainsift::dataset::{temporal_split, Dataset, DatasetError};

use crate::model::{DatasetInfo, OracleKind, SessionStatus, SessionView};

/// A dataset held in memory, ready to back sessions.
#[derive(Debug)]
pub struct DatasetEntry {
    pub name: String,
    pub digest: String,
    pub data: Arc<AlData>,
    /// Supervised reference F1 drawn next to learning curves.
    pub baseline_f1: Option<f64>,
}

impl DatasetEntry {
    /// Splits `dataset` at `boundary`; the train side becomes the pool.
    pub fn from_dataset(name: &str, dataset: &Dataset, boundary: u32) -> Result<Self, DatasetError> {
        let split = temporal_split(dataset, boundary)?;
        Ok(Self::from_data(name, &dataset.source_digest, AlData::from_split(&split)))
    }

    pub fn from_data(name: &str, digest: &str, data: AlData) -> Self {
        Self { name: name.to_string(), digest: digest.to_string(), data: Arc::new(data), baseline_f1: None }
    }

    pub fn with_baseline_f1(mut self, f1: Option<f64>) -> Self {
        self.baseline_f1 = f1;
        self
    }

    pub fn info(&self) -> DatasetInfo {
        DatasetInfo {
            name: self.name.clone(),
            digest: self.digest.clone(),
            pool_size: self.data.pool_len(),
            test_size: self.data.test_y.len(),
            baseline_f1: self.baseline_f1,
        }
    }
}

/// One session: an exclusive writer plus a lock-free-to-read snapshot.
pub struct SessionSlot {
    pub id: String,
    pub dataset: Arc<DatasetEntry>,
    pub oracle: OracleKind,
    pub created_at: u64,
    pub(crate) writer: Arc<Mutex<AlSession>>,
    view: RwLock<Arc<SessionView>>,
}

impl SessionSlot {
    pub(crate) fn new(
        id: String,
        dataset: Arc<DatasetEntry>,
        oracle: OracleKind,
        session: AlSession,
        created_at: u64,
        updated_at: u64,
    ) -> Self {
        let view = SessionView::build(&id, &dataset.name, oracle, &session, &dataset.data, created_at, updated_at);
        Self {
            id,
            dataset,
            oracle,
            created_at,
            writer: Arc::new(Mutex::new(session)),
            view: RwLock::new(Arc::new(view)),
        }
    }

    pub fn view(&self) -> Arc<SessionView> {
        self.view.read().expect("view lock poisoned").clone()
    }

    pub(crate) fn publish(&self, view: SessionView) {
        *self.view.write().expect("view lock poisoned") = Arc::new(view);
    }

    pub(crate) fn set_status(&self, status: SessionStatus) {
        let mut next = (*self.view()).clone();
        next.status = status;
        self.publish(next);
    }

    pub(crate) fn rebuild(&self, session: &AlSession, updated_at: u64) -> SessionView {
        SessionView::build(
            &self.id,
            &self.dataset.name,
            self.oracle,
            session,
            &self.dataset.data,
            self.created_at,
            updated_at,
        )
    }
}

/// On-disk form of a session, written after every completed iteration.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub session_id: String,
    pub dataset: String,
    pub dataset_digest: String,
    pub oracle: OracleKind,
    pub created_at: u64,
    pub updated_at: u64,
    pub session: AlSession,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    datasets: BTreeMap<String, Arc<DatasetEntry>>,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    state_dir: Option<PathBuf>,
}

impl AppState {
    /// `state_dir`, when set, receives one JSON checkpoint per session.
    pub fn new(datasets: Vec<DatasetEntry>, state_dir: Option<PathBuf>) -> Self {
        let datasets = datasets.into_iter().map(|d| (d.name.clone(), Arc::new(d))).collect();
        Self { inner: Arc::new(Inner { datasets, sessions: RwLock::new(HashMap::new()), state_dir }) }
    }

    pub fn dataset(&self, name: &str) -> Option<Arc<DatasetEntry>> {
        self.inner.datasets.get(name).cloned()
    }

    pub fn datasets(&self) -> Vec<DatasetInfo> {
        self.inner.datasets.values().map(|d| d.info()).collect()
    }

    pub fn session(&self, id: &str) -> Option<Arc<SessionSlot>> {
        self.inner.sessions.read().expect("session map poisoned").get(id).cloned()
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.inner.sessions.read().expect("session map poisoned").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Registers a new slot under a fresh random id.
    pub(crate) fn insert(&self, make: impl FnOnce(String) -> SessionSlot) -> Arc<SessionSlot> {
        let mut map = self.inner.sessions.write().expect("session map poisoned");
        let id = loop {
            let candidate = format!("{:016x}", rand::random::<u64>());
            if !map.contains_key(&candidate) {
                break candidate;
            }
        };
        let slot = Arc::new(make(id.clone()));
        map.insert(id, slot.clone());
        slot
    }

    fn checkpoint_dir(&self) -> Option<PathBuf> {
        self.inner.state_dir.as_ref().map(|d| d.join("sessions"))
    }

    pub(crate) fn write_checkpoint(&self, slot: &SessionSlot, session: &AlSession, updated_at: u64) -> std::io::Result<()> {
        let Some(dir) = self.checkpoint_dir() else { return Ok(()) };
        std::fs::create_dir_all(&dir)?;
        let cp = Checkpoint {
            session_id: slot.id.clone(),
            dataset: slot.dataset.name.clone(),
            dataset_digest: slot.dataset.digest.clone(),
            oracle: slot.oracle,
            created_at: slot.created_at,
            updated_at,
            session: session.clone(),
        };
        let body = serde_json::to_vec(&cp).map_err(std::io::Error::other)?;
        let tmp = dir.join(format!("{}.json.tmp", slot.id));
        std::fs::write(&tmp, body)?;
        std::fs::rename(tmp, dir.join(format!("{}.json", slot.id)))
    }

    /// Loads every checkpoint in the state directory. Checkpoints whose
    /// dataset is missing or has a different digest are skipped with a
    /// warning. Returns the restored slots.
    pub fn restore(&self) -> std::io::Result<Vec<Arc<SessionSlot>>> {
        let Some(dir) = self.checkpoint_dir() else { return Ok(Vec::new()) };
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut restored = Vec::new();
        for path in paths {
            match self.restore_one(&path) {
                Ok(slot) => restored.push(slot),
                Err(msg) => log::warn!("skipping checkpoint {}: {msg}", path.display()),
            }
        }
        Ok(restored)
    }

    fn restore_one(&self, path: &Path) -> Result<Arc<SessionSlot>, String> {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let cp: Checkpoint = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let dataset = self.dataset(&cp.dataset).ok_or_else(|| format!("dataset {:?} is not loaded", cp.dataset))?;
        if dataset.digest != cp.dataset_digest {
            return Err(format!("dataset {:?} digest changed", cp.dataset));
        }
        cp.session.check_invariants(&dataset.data)?;
        let slot = Arc::new(SessionSlot::new(
            cp.session_id.clone(),
            dataset,
            cp.oracle,
            cp.session,
            cp.created_at,
            cp.updated_at,
        ));
        self.inner.sessions.write().expect("session map poisoned").insert(cp.session_id, slot.clone());
        Ok(slot)
    }
}

pub(crate) fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}
