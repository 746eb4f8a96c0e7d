use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, Label, TransactionRecord, MAX_TIME_STEP};
use crate::numkit::{Matrix, SeededRng};

pub const DEFAULT_BOUNDARY: u32 = 34;

/// Labeled records partitioned by time step: `train` holds steps
/// `<= boundary`, `test` the rest. Both sides keep ascending `tx_id` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<TransactionRecord>,
    pub test: Vec<TransactionRecord>,
    pub boundary: u32,
}

impl DatasetSplit {
    pub fn train_xy(&self) -> (Matrix, Vec<u8>) {
        super::to_matrix(&self.train)
    }

    pub fn test_xy(&self) -> (Matrix, Vec<u8>) {
        super::to_matrix(&self.test)
    }

    pub fn test_time_steps(&self) -> Vec<u32> {
        self.test.iter().map(|r| r.time_step).collect()
    }

    pub fn illicit_rate(side: &[TransactionRecord]) -> f64 {
        if side.is_empty() {
            return 0.0;
        }
        side.iter().filter(|r| r.label == Label::Illicit).count() as f64 / side.len() as f64
    }
}

pub fn temporal_split(dataset: &Dataset, boundary: u32) -> Result<DatasetSplit, DatasetError> {
    if boundary < 1 || boundary >= MAX_TIME_STEP {
        return Err(DatasetError::BoundaryOutOfRange(boundary));
    }
    let (train, test): (Vec<_>, Vec<_>) = dataset
        .records
        .iter()
        .filter(|r| r.label.is_labeled())
        .cloned()
        .partition(|r| r.time_step <= boundary);
    if train.is_empty() {
        return Err(DatasetError::EmptySide("train"));
    }
    if test.is_empty() {
        return Err(DatasetError::EmptySide("test"));
    }
    Ok(DatasetSplit { train, test, boundary })
}

/// Randomly drops illicit records on each side until the illicit share
/// matches `target_rate` (round-half-up on the retained count). Licit
/// records are untouched. Train and test use independent seeded streams.
pub fn undersample_illicit(
    split: &DatasetSplit,
    target_rate: f64,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(DatasetError::InvalidRate(target_rate));
    }
    for (side, records) in [("train", &split.train), ("test", &split.test)] {
        let current = DatasetSplit::illicit_rate(records);
        if target_rate > current + 1e-12 {
            return Err(DatasetError::TargetRateAboveCurrent { side, current, target: target_rate });
        }
    }
    Ok(DatasetSplit {
        train: undersample_side(&split.train, target_rate, SeededRng::with_stream(seed, 0)),
        test: undersample_side(&split.test, target_rate, SeededRng::with_stream(seed, 1)),
        boundary: split.boundary,
    })
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Number of illicit records to keep so that
/// `keep == round_half_up(rate * (licit + keep))`.
///
/// Any solution lies within `0.5 / (1 - rate)` of `rate * licit / (1 - rate)`,
/// so only a small window is searched; the largest solution not exceeding
/// `illicit` wins. Without a solution the count with the closest rate is used.
pub fn undersample_keep_count(licit: usize, illicit: usize, rate: f64) -> usize {
    let centre = rate * licit as f64 / (1.0 - rate);
    let reach = 0.5 / (1.0 - rate) + 2.0;
    let lo = (centre - reach).floor().max(0.0) as usize;
    let hi = ((centre + reach).ceil() as usize).min(illicit);
    if lo > hi {
        return illicit;
    }
    if let Some(k) = (lo..=hi).rev().find(|&k| k == round_half_up(rate * (licit + k) as f64)) {
        return k;
    }
    (lo..=hi)
        .min_by(|&a, &b| {
            let ra = (a as f64 / (licit + a).max(1) as f64 - rate).abs();
            let rb = (b as f64 / (licit + b).max(1) as f64 - rate).abs();
            ra.total_cmp(&rb).then(b.cmp(&a))
        })
        .unwrap_or(illicit)
}

fn undersample_side(records: &[TransactionRecord], rate: f64, mut rng: SeededRng) -> Vec<TransactionRecord> {
    let illicit_pos: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label == Label::Illicit)
        .map(|(i, _)| i)
        .collect();
    let licit = records.len() - illicit_pos.len();
    let keep = undersample_keep_count(licit, illicit_pos.len(), rate);
    if keep >= illicit_pos.len() {
        return records.to_vec();
    }
    let mut kept = vec![false; records.len()];
    for j in rng.sample_indices(illicit_pos.len(), keep) {
        kept[illicit_pos[j]] = true;
    }
    records
        .iter()
        .enumerate()
        .filter(|(i, r)| r.label != Label::Illicit || kept[*i])
        .map(|(_, r)| r.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::N_FEATURES;

    fn rec(tx_id: u64, step: u32, label: Label) -> TransactionRecord {
        let mut features = vec![0.0; N_FEATURES];
        features[0] = step as f64;
        TransactionRecord { tx_id, time_step: step, features, label }
    }

    fn six() -> Dataset {
        Dataset::from_records(vec![
            rec(1, 1, Label::Licit),
            rec(2, 2, Label::Illicit),
            rec(3, 3, Label::Licit),
            rec(4, 4, Label::Illicit),
            rec(5, 5, Label::Licit),
            rec(6, 2, Label::Unknown),
        ])
        .unwrap()
    }

    #[test]
    fn six_record_fixture() {
        let s = temporal_split(&six(), 3).unwrap();
        let train: Vec<u64> = s.train.iter().map(|r| r.tx_id).collect();
        let test: Vec<u64> = s.test.iter().map(|r| r.tx_id).collect();
        assert_eq!(train, vec![1, 2, 3]);
        assert_eq!(test, vec![4, 5]);
    }

    #[test]
    fn boundary_and_empty_side() {
        assert!(matches!(temporal_split(&six(), 0), Err(DatasetError::BoundaryOutOfRange(0))));
        assert!(matches!(temporal_split(&six(), 49), Err(DatasetError::BoundaryOutOfRange(49))));
        let early = Dataset::from_records(vec![rec(1, 1, Label::Licit), rec(2, 1, Label::Illicit)]).unwrap();
        assert!(matches!(temporal_split(&early, 34), Err(DatasetError::EmptySide("test"))));
    }

    /// Exhaustive oracle: largest k in 0..=illicit with k == round(rate * (licit + k)).
    fn keep_oracle(licit: usize, illicit: usize, rate: f64) -> Option<usize> {
        (0..=illicit).rev().find(|&k| k == ((rate * (licit + k) as f64) + 0.5).floor() as usize)
    }

    #[test]
    fn ten_illicit_ninety_licit_keeps_five() {
        assert_eq!(keep_oracle(90, 10, 0.05), Some(5));
        assert_eq!(undersample_keep_count(90, 10, 0.05), 5);
    }

    #[test]
    fn keep_count_matches_exhaustive_oracle() {
        for licit in [0usize, 1, 7, 90, 1000, 42_019] {
            for illicit in [0usize, 1, 5, 50, 4545] {
                for rate in [0.005, 0.02, 0.05, 0.1, 0.3, 0.6, 0.9] {
                    if let Some(k) = keep_oracle(licit, illicit, rate) {
                        assert_eq!(undersample_keep_count(licit, illicit, rate), k, "{licit} {illicit} {rate}");
                    }
                }
            }
        }
    }

    fn split_100() -> DatasetSplit {
        let mut recs = Vec::new();
        for i in 0..100u64 {
            let label = if i % 10 == 0 { Label::Illicit } else { Label::Licit };
            recs.push(rec(i, 1, label));
            recs.push(rec(1000 + i, 40, label));
        }
        temporal_split(&Dataset::from_records(recs).unwrap(), 34).unwrap()
    }

    #[test]
    fn undersampling_hits_count_and_is_seeded() {
        let s = split_100();
        let u = undersample_illicit(&s, 0.05, 9).unwrap();
        for side in [&u.train, &u.test] {
            assert_eq!(side.iter().filter(|r| r.label == Label::Illicit).count(), 5);
            assert_eq!(side.iter().filter(|r| r.label == Label::Licit).count(), 90);
        }
        assert_eq!(u, undersample_illicit(&s, 0.05, 9).unwrap());
        assert_ne!(u, undersample_illicit(&s, 0.05, 10).unwrap());
        // Equal rate is the identity.
        assert_eq!(undersample_illicit(&s, 0.1, 3).unwrap(), s);
        assert!(matches!(
            undersample_illicit(&s, 0.2, 1),
            Err(DatasetError::TargetRateAboveCurrent { .. })
        ));
        assert!(matches!(undersample_illicit(&s, 0.0, 1), Err(DatasetError::InvalidRate(_))));
    }
}
