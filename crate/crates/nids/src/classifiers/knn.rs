//! k-nearest-neighbors: memorize the training set, classify by majority
//! vote among the k closest rows under Euclidean distance.

use rayon::prelude::*;

use super::ClassifierError;
use crate::data::Dataset;

/// A fitted k-NN model — the training table plus `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub(crate) k: usize,
    pub(crate) rows: Vec<Vec<f64>>,
    pub(crate) labels: Vec<u8>,
}

impl KnnModel {
    pub fn fit(train: &Dataset, k: usize) -> Result<KnnModel, ClassifierError> {
        if train.is_empty() {
            return Err(ClassifierError::EmptyTrainingSet);
        }
        if k == 0 {
            return Err(ClassifierError::BadK);
        }
        Ok(KnnModel { k, rows: train.features.clone(), labels: train.labels.clone() })
    }

    pub(crate) fn from_parts(
        k: usize,
        n_features: usize,
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
    ) -> Result<KnnModel, ClassifierError> {
        if rows.is_empty() {
            return Err(ClassifierError::EmptyTrainingSet);
        }
        if k == 0 {
            return Err(ClassifierError::BadK);
        }
        if rows.iter().any(|r| r.len() != n_features) || labels.len() != rows.len() {
            return Err(ClassifierError::DimensionMismatch {
                got: rows.iter().map(Vec::len).find(|&l| l != n_features).unwrap_or(labels.len()),
                expected: n_features,
            });
        }
        Ok(KnnModel { k, rows, labels })
    }

    pub fn n_features(&self) -> usize {
        self.rows[0].len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Classifies each query row in parallel. Voting is deterministic: the
    /// neighborhood is the k smallest (distance, training-index) pairs in
    /// lexicographic order — equal distances resolve to the lower index —
    /// and a tied vote falls back to the single nearest neighbor's label.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>, ClassifierError> {
        let n_features = self.n_features();
        if let Some(bad) = rows.iter().find(|r| r.len() != n_features) {
            return Err(ClassifierError::DimensionMismatch {
                got: bad.len(),
                expected: n_features,
            });
        }
        Ok(rows.par_iter().map(|q| self.classify(q)).collect())
    }

    fn classify(&self, query: &[f64]) -> u8 {
        // Squared distances order identically to distances and skip the sqrt.
        let mut scored: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| (squared_distance(query, row), i))
            .collect();
        let k = self.k.min(scored.len());
        let by_distance_then_index = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        scored.select_nth_unstable_by(k - 1, by_distance_then_index);
        scored.truncate(k);
        scored.sort_unstable_by(by_distance_then_index);

        let votes_for_1 = scored.iter().filter(|&&(_, i)| self.labels[i] == 1).count();
        if 2 * votes_for_1 == k {
            self.labels[scored[0].1]
        } else {
            u8::from(2 * votes_for_1 > k)
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
