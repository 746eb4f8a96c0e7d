use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AlConfig, AlData, AlError, AlSession, PhaseChange};
use crate::dataset::{Label, TxId};
use crate::metrics::MetricSeries;

/// Source of labels for queried transactions.
#[derive(Debug, Clone)]
pub enum LabelOracle {
    /// Ground truth; answers every batch immediately.
    Simulated(BTreeMap<TxId, Label>),
    /// A human behind the service API; never answers in-process.
    Interactive,
}

impl LabelOracle {
    pub fn simulated(data: &AlData) -> Self {
        LabelOracle::Simulated(data.pool_ids.iter().copied().zip(data.pool_labels.iter().copied()).collect())
    }

    /// Labels for `ids`, or `None` when the answer is deferred.
    pub fn answer(&self, ids: &[TxId]) -> Option<BTreeMap<TxId, Label>> {
        match self {
            LabelOracle::Simulated(truth) => Some(ids.iter().filter_map(|id| truth.get(id).map(|l| (*id, *l))).collect()),
            LabelOracle::Interactive => None,
        }
    }
}

/// Outcome of a complete simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlRun {
    pub history: MetricSeries,
    pub annotations: Vec<PhaseChange>,
    pub iterations: usize,
    pub labeled: usize,
}

/// Drives select / label / retrain with the ground-truth oracle until the
/// labeled pool reaches `stop_at` or the pool is exhausted.
pub fn run_simulated(config: &AlConfig, data: &AlData) -> Result<AlRun, AlError> {
    let oracle = LabelOracle::simulated(data);
    let mut session = AlSession::new(config.clone(), data)?;
    while !session.is_finished() {
        let ids: Vec<TxId> = session.select_batch(data)?.iter().map(|p| p.tx_id).collect();
        let answers = oracle.answer(&ids).expect("simulated oracle always answers");
        session.submit_labels(data, &answers)?;
    }
    Ok(AlRun {
        history: session.history().clone(),
        annotations: session.annotations().to_vec(),
        iterations: session.iterations(),
        labeled: session.labeled().len(),
    })
}
