//! Request and response bodies.

use serde::{Deserialize, Serialize};

use chainsift::active_learning::{AlConfig, AlData, AlSession, PendingItem, Phase, PhaseChange};
use chainsift::dataset::TxId;
use chainsift::metrics::{MetricPoint, MetricSeries};

/// Features shown per queued transaction.
pub const SUMMARY_FEATURES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// A human answers through `POST /labels`.
    Interactive,
    /// The server answers from ground truth in the background.
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingLabels,
    Training,
    Finished,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub dataset: String,
    #[serde(default)]
    pub config: AlConfig,
    #[serde(default = "interactive")]
    pub oracle: OracleKind,
}

fn interactive() -> OracleKind {
    OracleKind::Interactive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureValue {
    pub feature: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub tx_id: TxId,
    pub time_step: u32,
    pub model_score: Option<f64>,
    pub anomaly_score: Option<f64>,
    pub top_features: Vec<FeatureValue>,
}

impl BatchItem {
    /// `top_features` holds the largest-magnitude non-time features
    /// (column 0 is the time step); ties go to the lower column.
    pub fn new(item: &PendingItem, data: &AlData) -> Self {
        let pos = data.position(item.tx_id).expect("pending ids belong to the pool");
        let row = data.pool_x.row(pos);
        let mut cols: Vec<usize> = (1..row.len()).collect();
        cols.sort_by(|&a, &b| row[b].abs().total_cmp(&row[a].abs()).then(a.cmp(&b)));
        Self {
            tx_id: item.tx_id,
            time_step: data.pool_time_steps[pos],
            model_score: item.model_score,
            anomaly_score: item.anomaly_score,
            top_features: cols.into_iter().take(SUMMARY_FEATURES).map(|c| FeatureValue { feature: c, value: row[c] }).collect(),
        }
    }
}

/// Read-side snapshot of a session, rebuilt after every completed step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub dataset: String,
    pub oracle: OracleKind,
    pub status: SessionStatus,
    pub phase: Phase,
    pub config: AlConfig,
    pub labeled: usize,
    pub unlabeled: usize,
    pub pending: usize,
    pub iterations: usize,
    pub latest: Option<MetricPoint>,
    pub created_at: u64,
    pub updated_at: u64,
    #[serde(skip)]
    pub batch: Vec<BatchItem>,
    #[serde(skip)]
    pub history: MetricSeries,
    #[serde(skip)]
    pub annotations: Vec<PhaseChange>,
}

impl SessionView {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        session_id: &str,
        dataset: &str,
        oracle: OracleKind,
        session: &AlSession,
        data: &AlData,
        created_at: u64,
        updated_at: u64,
    ) -> Self {
        let status = if session.is_finished() {
            SessionStatus::Finished
        } else if session.pending().is_empty() {
            // Only reachable when selecting the next batch failed.
            SessionStatus::Training
        } else {
            SessionStatus::AwaitingLabels
        };
        Self {
            session_id: session_id.to_string(),
            dataset: dataset.to_string(),
            oracle,
            status,
            phase: session.phase(),
            config: session.config().clone(),
            labeled: session.labeled().len(),
            unlabeled: session.unlabeled().len(),
            pending: session.pending().len(),
            iterations: session.iterations(),
            latest: session.history().last().copied(),
            created_at,
            updated_at,
            batch: session.pending().iter().map(|p| BatchItem::new(p, data)).collect(),
            history: session.history().clone(),
            annotations: session.annotations().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResponse {
    pub session_id: String,
    pub phase: Phase,
    pub items: Vec<BatchItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsResponse {
    #[serde(flatten)]
    pub series: MetricSeries,
    pub annotations: Vec<PhaseChange>,
    pub baseline_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResponse {
    pub status: SessionStatus,
    pub phase: Phase,
    pub labeled: usize,
    pub point: Option<MetricPoint>,
    pub phase_change: Option<PhaseChange>,
    pub history_tail: Vec<MetricPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub digest: String,
    pub pool_size: usize,
    pub test_size: usize,
    pub baseline_f1: Option<f64>,
}
