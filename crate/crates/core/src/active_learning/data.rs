use std::collections::HashMap;

use crate::dataset::{to_matrix, DatasetSplit, Label, TransactionRecord, TxId};
use crate::numkit::Matrix;

/// Read-only data a session operates on: the training pool (features plus
/// ground truth, the latter only used by the simulated oracle) and the test
/// side used for evaluation.
#[derive(Debug, Clone)]
pub struct AlData {
    pub pool_ids: Vec<TxId>,
    pub pool_x: Matrix,
    pub pool_time_steps: Vec<u32>,
    pub pool_labels: Vec<Label>,
    pub test_x: Matrix,
    pub test_y: Vec<u8>,
    index: HashMap<TxId, usize>,
}

impl AlData {
    pub fn new(pool: &[TransactionRecord], test: &[TransactionRecord]) -> Self {
        let mut pool: Vec<&TransactionRecord> = pool.iter().collect();
        pool.sort_by_key(|r| r.tx_id);
        let owned: Vec<TransactionRecord> = pool.into_iter().cloned().collect();
        let (pool_x, _) = to_matrix(&owned);
        let (test_x, test_y) = to_matrix(test);
        Self {
            pool_ids: owned.iter().map(|r| r.tx_id).collect(),
            pool_time_steps: owned.iter().map(|r| r.time_step).collect(),
            pool_labels: owned.iter().map(|r| r.label).collect(),
            index: owned.iter().enumerate().map(|(i, r)| (r.tx_id, i)).collect(),
            pool_x,
            test_x,
            test_y,
        }
    }

    pub fn from_split(split: &DatasetSplit) -> Self {
        Self::new(&split.train, &split.test)
    }

    pub fn pool_len(&self) -> usize {
        self.pool_ids.len()
    }

    pub fn position(&self, id: TxId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn truth(&self, id: TxId) -> Option<Label> {
        self.position(id).map(|i| self.pool_labels[i])
    }

    pub fn features(&self, id: TxId) -> Option<&[f64]> {
        self.position(id).map(|i| self.pool_x.row(i))
    }

    /// Feature rows for `ids`, which must all belong to the pool.
    pub fn rows(&self, ids: &[TxId]) -> Matrix {
        let idx: Vec<usize> = ids.iter().map(|id| self.index[id]).collect();
        self.pool_x.select_rows(&idx)
    }
}
