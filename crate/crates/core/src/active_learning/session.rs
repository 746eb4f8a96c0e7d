use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::config::{HotStrategy, WarmupStrategy};
use super::query::{query_expected_model_change, query_uncertainty, top_b};
use super::{AlConfig, AlData, AlError};
use crate::classifiers::{predict_labels, train, train_logistic, ClassifierError, LogisticModel, Model};
use crate::dataset::{Label, TxId};
use crate::detectors::{fit_score, DetectorSpec, Method};
use crate::metrics::{illicit_f1, MetricPoint, MetricSeries, XMeaning};
use crate::numkit::{RngState, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initial,
    WarmUp,
    Hot,
}

/// Recorded whenever the phase advances; `pool_size` is the labeled pool
/// size right after the batch that triggered it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseChange {
    pub pool_size: usize,
    pub from: Phase,
    pub to: Phase,
}

/// A queried transaction awaiting its label, with the scores that ranked it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingItem {
    pub tx_id: TxId,
    pub model_score: Option<f64>,
    pub anomaly_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub labeled: usize,
    pub phase: Phase,
    pub phase_change: Option<PhaseChange>,
    pub point: Option<MetricPoint>,
    pub finished: bool,
}

/// Complete, serializable state of one active-learning run.
///
/// Trained models are caches: they are rebuilt on demand from the labeled
/// pool with a seed derived from the session seed and pool size, so a
/// session restored from JSON behaves exactly like the original.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlSession {
    config: AlConfig,
    pool_size: usize,
    labeled: BTreeMap<TxId, Label>,
    unlabeled: BTreeSet<TxId>,
    pending: Vec<PendingItem>,
    phase: Phase,
    history: MetricSeries,
    annotations: Vec<PhaseChange>,
    rng: RngState,
    iterations: usize,
    #[serde(skip)]
    model: Option<(usize, Option<Model>)>,
    #[serde(skip)]
    emc_model: Option<(usize, LogisticModel)>,
}

impl AlSession {
    pub fn new(config: AlConfig, data: &AlData) -> Result<Self, AlError> {
        config.validate(data.pool_len())?;
        Ok(Self {
            pool_size: data.pool_len(),
            labeled: BTreeMap::new(),
            unlabeled: data.pool_ids.iter().copied().collect(),
            pending: Vec::new(),
            phase: Phase::Initial,
            history: MetricSeries::new(XMeaning::LabeledPoolSize),
            annotations: Vec::new(),
            rng: SeededRng::new(config.seed).state(),
            iterations: 0,
            model: None,
            emc_model: None,
            config,
        })
    }

    pub fn config(&self) -> &AlConfig {
        &self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn labeled(&self) -> &BTreeMap<TxId, Label> {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<TxId> {
        &self.unlabeled
    }

    pub fn pending(&self) -> &[PendingItem] {
        &self.pending
    }

    pub fn history(&self) -> &MetricSeries {
        &self.history
    }

    pub fn annotations(&self) -> &[PhaseChange] {
        &self.annotations
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    pub fn is_finished(&self) -> bool {
        self.pending.is_empty() && (self.labeled.len() >= self.config.stop_at || self.unlabeled.is_empty())
    }

    /// Checks the pool-partition and phase invariants against `data`.
    pub fn check_invariants(&self, data: &AlData) -> Result<(), String> {
        let pending: BTreeSet<TxId> = self.pending.iter().map(|p| p.tx_id).collect();
        if pending.len() != self.pending.len() {
            return Err("duplicate id in pending batch".into());
        }
        let total = self.labeled.len() + self.unlabeled.len() + pending.len();
        if total != data.pool_len() {
            return Err(format!("pools hold {total} ids, train pool has {}", data.pool_len()));
        }
        for id in &data.pool_ids {
            let hits = usize::from(self.labeled.contains_key(id))
                + usize::from(self.unlabeled.contains(id))
                + usize::from(pending.contains(id));
            if hits != 1 {
                return Err(format!("tx {id} appears in {hits} pools"));
            }
        }
        if self.labeled.values().any(|l| !l.is_labeled()) {
            return Err("labeled pool holds an unknown label".into());
        }
        if self.phase == Phase::Hot
            && (self.config.hot == HotStrategy::None || !self.labeled.values().any(|l| *l == Label::Illicit))
        {
            return Err("hot phase without an illicit label or hot strategy".into());
        }
        if (self.phase == Phase::Initial) != self.labeled.is_empty() {
            return Err("initial phase must coincide with an empty labeled pool".into());
        }
        Ok(())
    }

    fn check_data(&self, data: &AlData) -> Result<(), AlError> {
        if data.pool_len() != self.pool_size {
            return Err(AlError::PoolMismatch { expected: self.pool_size, found: data.pool_len() });
        }
        Ok(())
    }

    /// Queries the next batch and moves it to the pending list.
    pub fn select_batch(&mut self, data: &AlData) -> Result<&[PendingItem], AlError> {
        self.check_data(data)?;
        if !self.pending.is_empty() {
            return Err(AlError::BatchPending(self.pending.len()));
        }
        if self.labeled.len() >= self.config.stop_at {
            return Err(AlError::StopReached(self.config.stop_at));
        }
        if self.unlabeled.is_empty() {
            return Err(AlError::PoolExhausted);
        }
        let b = self
            .config
            .batch_size
            .min(self.config.stop_at - self.labeled.len())
            .min(self.unlabeled.len());
        let candidates: Vec<TxId> = self.unlabeled.iter().copied().collect();
        let items = match (self.phase, self.config.warmup) {
            (Phase::Initial, _) | (Phase::WarmUp, WarmupStrategy::Random) => self.random_batch(&candidates, b),
            (Phase::WarmUp, w) => self.detector_batch(data, &candidates, b, w)?,
            (Phase::Hot, _) => self.hot_batch(data, &candidates, b)?,
        };
        for item in &items {
            self.unlabeled.remove(&item.tx_id);
        }
        self.pending = items;
        Ok(&self.pending)
    }

    fn random_batch(&mut self, candidates: &[TxId], b: usize) -> Vec<PendingItem> {
        let mut rng = SeededRng::from_state(self.rng);
        let mut picks = rng.sample_indices(candidates.len(), b);
        self.rng = rng.state();
        picks.sort_unstable();
        picks
            .into_iter()
            .map(|i| PendingItem { tx_id: candidates[i], model_score: None, anomaly_score: None })
            .collect()
    }

    fn detector_batch(
        &mut self,
        data: &AlData,
        candidates: &[TxId],
        b: usize,
        warmup: WarmupStrategy,
    ) -> Result<Vec<PendingItem>, AlError> {
        let method = match warmup {
            WarmupStrategy::Iforest => Method::Iforest,
            _ => Method::Elliptic,
        };
        let spec = DetectorSpec::with_defaults(method, self.derived_seed(0xD37EC7));
        let labeled: Vec<TxId> = self.labeled.keys().copied().collect();
        // A labeled pool too small to fit the detector falls back to random.
        if labeled.len() < spec.params().min_reference() {
            return Ok(self.random_batch(candidates, b));
        }
        let scores = fit_score(&spec, &data.rows(&labeled), &data.rows(candidates))?.scores;
        Ok(top_b(&scores, b)
            .into_iter()
            .map(|i| PendingItem { tx_id: candidates[i], model_score: None, anomaly_score: Some(scores[i]) })
            .collect())
    }

    fn hot_batch(&mut self, data: &AlData, candidates: &[TxId], b: usize) -> Result<Vec<PendingItem>, AlError> {
        let x = data.rows(candidates);
        let model = self.ensure_model(data)?.ok_or(AlError::UntrainedModel)?;
        let scores = model.predict_scores(&x)?;
        let picks = match self.config.hot {
            HotStrategy::Uncertainty => query_uncertainty(&scores, b),
            HotStrategy::ExpectedModelChange => {
                let lr = self.ensure_emc_model(data)?;
                query_expected_model_change(lr, &x, b).0
            }
            HotStrategy::None => return Err(AlError::UntrainedModel),
        };
        Ok(picks
            .into_iter()
            .map(|i| PendingItem { tx_id: candidates[i], model_score: Some(scores[i]), anomaly_score: None })
            .collect())
    }

    /// Checks that `answers` label exactly the pending batch, without
    /// changing anything.
    pub fn validate_answers(&self, data: &AlData, answers: &BTreeMap<TxId, Label>) -> Result<(), AlError> {
        self.check_data(data)?;
        if self.pending.is_empty() {
            return Err(AlError::NoPendingBatch);
        }
        let unknown: Vec<TxId> = answers.keys().copied().filter(|id| data.position(*id).is_none()).collect();
        if !unknown.is_empty() {
            return Err(AlError::UnknownTxId(unknown));
        }
        if let Some((id, _)) = answers.iter().find(|(_, l)| !l.is_labeled()) {
            return Err(AlError::InvalidLabel(*id));
        }
        let pending: BTreeSet<TxId> = self.pending.iter().map(|p| p.tx_id).collect();
        let missing: Vec<TxId> = pending.iter().copied().filter(|id| !answers.contains_key(id)).collect();
        let extra: Vec<TxId> = answers.keys().copied().filter(|id| !pending.contains(id)).collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(AlError::BatchMismatch { missing, extra });
        }
        Ok(())
    }

    /// Applies the oracle's answers for the whole pending batch.
    ///
    /// The update is atomic: on any error the session is left untouched.
    pub fn submit_labels(&mut self, data: &AlData, answers: &BTreeMap<TxId, Label>) -> Result<SubmitOutcome, AlError> {
        self.validate_answers(data, answers)?;
        let mut next = self.clone();
        let outcome = next.apply(data, answers)?;
        *self = next;
        Ok(outcome)
    }

    fn apply(&mut self, data: &AlData, answers: &BTreeMap<TxId, Label>) -> Result<SubmitOutcome, AlError> {
        self.labeled.extend(answers.iter().map(|(k, v)| (*k, *v)));
        self.pending.clear();
        self.iterations += 1;

        let before = self.phase;
        if self.phase == Phase::Initial {
            self.phase = Phase::WarmUp;
        }
        let has_illicit = self.labeled.values().any(|l| *l == Label::Illicit);
        let has_licit = self.labeled.values().any(|l| *l == Label::Licit);
        if self.phase == Phase::WarmUp && self.config.hot != HotStrategy::None && has_illicit && has_licit {
            self.phase = Phase::Hot;
        }
        let phase_change = (self.phase != before).then(|| PhaseChange {
            pool_size: self.labeled.len(),
            from: before,
            to: self.phase,
        });
        if let Some(change) = phase_change {
            self.annotations.push(change);
        }

        let finished = self.is_finished();
        let point = if self.iterations % self.config.eval_every == 0 || finished {
            let point = self.evaluate(data)?;
            self.history.points.push(point);
            Some(point)
        } else {
            None
        };
        Ok(SubmitOutcome { labeled: self.labeled.len(), phase: self.phase, phase_change, point, finished })
    }

    /// Test-side illicit F1 of the session classifier. A single-class
    /// labeled pool has no classifier and predicts every test row licit.
    fn evaluate(&mut self, data: &AlData) -> Result<MetricPoint, AlError> {
        let preds = match self.ensure_model(data)? {
            Some(model) => predict_labels(&model.predict_scores(&data.test_x)?),
            None => vec![0; data.test_y.len()],
        };
        let report = illicit_f1(&data.test_y, &preds)?;
        Ok(MetricPoint::from_report(self.labeled.len() as u64, &report))
    }

    fn labeled_xy(&self, data: &AlData) -> (crate::numkit::Matrix, Vec<u8>) {
        let ids: Vec<TxId> = self.labeled.keys().copied().collect();
        let y = self.labeled.values().map(|l| l.as_target()).collect();
        (data.rows(&ids), y)
    }

    /// Seed for per-iteration models and detectors: a function of the
    /// session seed and the labeled pool size only.
    fn derived_seed(&self, salt: u64) -> u64 {
        self.config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt).rotate_left(17)
            ^ self.labeled.len() as u64
    }

    /// Session classifier trained on the current labeled pool, or `None`
    /// when the pool has a single class.
    pub fn ensure_model(&mut self, data: &AlData) -> Result<Option<&Model>, AlError> {
        let n = self.labeled.len();
        if self.model.as_ref().is_none_or(|(k, _)| *k != n) {
            let (x, y) = self.labeled_xy(data);
            let seed = self.derived_seed(0x5E55);
            let model = match train(self.config.classifier, &x, &y, &self.config.models, seed) {
                Ok(m) => Some(m),
                Err(ClassifierError::SingleClassPool) => None,
                Err(e) => return Err(e.into()),
            };
            self.model = Some((n, model));
        }
        Ok(self.model.as_ref().and_then(|(_, m)| m.as_ref()))
    }

    fn ensure_emc_model(&mut self, data: &AlData) -> Result<&LogisticModel, AlError> {
        let n = self.labeled.len();
        if self.emc_model.as_ref().is_none_or(|(k, _)| *k != n) {
            let (x, y) = self.labeled_xy(data);
            let lr = train_logistic(&x, &y, &self.config.models.logistic)?;
            self.emc_model = Some((n, lr));
        }
        Ok(&self.emc_model.as_ref().expect("just trained").1)
    }
}
