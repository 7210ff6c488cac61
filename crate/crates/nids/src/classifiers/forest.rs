//! Random forest: bagged decision trees over bootstrap resamples with
//! per-node feature subsampling, combined by majority vote.

use rand::Rng;
use rayon::prelude::*;

use super::tree::DecisionTree;
use super::{ClassifierError, Criterion};
use crate::data::Dataset;
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForestModel {
    pub(crate) trees: Vec<DecisionTree>,
    pub(crate) criterion: Criterion,
    n_features: usize,
}

impl RandomForestModel {
    /// Fits `trees` trees. Tree `t` draws its bootstrap sample and all its
    /// node-level feature subsets from an rng seeded by `(seed, t)`, so the
    /// forest is reproducible and trees can be grown in parallel in any
    /// order without changing the result.
    pub fn fit(
        train: &Dataset,
        trees: usize,
        criterion: Criterion,
        seed: u64,
    ) -> Result<RandomForestModel, ClassifierError> {
        if train.is_empty() {
            return Err(ClassifierError::EmptyTrainingSet);
        }
        if trees == 0 {
            return Err(ClassifierError::NoTrees);
        }
        let n = train.len();
        let n_features = train.n_features();
        let subsample = (n_features as f64).sqrt().ceil() as usize;

        let grown: Vec<DecisionTree> = (0..trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(seed, t as u64);
                let bootstrap: Vec<usize> =
                    (0..n).map(|_| rng.random_range(0..n)).collect();
                DecisionTree::grow(
                    &train.features,
                    &train.labels,
                    bootstrap,
                    criterion,
                    subsample,
                    &mut rng,
                )
            })
            .collect::<Result<_, _>>()?;
        Ok(RandomForestModel { trees: grown, criterion, n_features })
    }

    pub(crate) fn from_parts(
        trees: Vec<DecisionTree>,
        criterion: Criterion,
        n_features: usize,
    ) -> Result<RandomForestModel, ClassifierError> {
        if trees.is_empty() {
            return Err(ClassifierError::NoTrees);
        }
        if let Some(bad) = trees
            .iter()
            .filter_map(DecisionTree::max_feature)
            .find(|&f| f >= n_features)
        {
            return Err(ClassifierError::DimensionMismatch { got: bad, expected: n_features });
        }
        Ok(RandomForestModel { trees, criterion, n_features })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Majority vote across trees for each query row; an exactly tied vote
    /// goes to class 0 (benign — the conservative call for detection).
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>, ClassifierError> {
        if let Some(bad) = rows.iter().find(|r| r.len() != self.n_features) {
            return Err(ClassifierError::DimensionMismatch {
                got: bad.len(),
                expected: self.n_features,
            });
        }
        Ok(rows
            .par_iter()
            .map(|row| {
                let ones = self
                    .trees
                    .iter()
                    .filter(|tree| tree.predict_row(row) == 1)
                    .count();
                u8::from(2 * ones > self.trees.len())
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::blob_dataset;

    #[test]
    fn fit_is_deterministic_per_seed() {
        let d = blob_dataset(60, 5, 2.5, 1.0, 31);
        let a = RandomForestModel::fit(&d, 15, Criterion::Gini, 4).unwrap();
        let b = RandomForestModel::fit(&d, 15, Criterion::Gini, 4).unwrap();
        assert_eq!(a, b);
        let c = RandomForestModel::fit(&d, 15, Criterion::Gini, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn trees_differ_within_a_forest() {
        let d = blob_dataset(60, 5, 2.0, 1.0, 37);
        let forest = RandomForestModel::fit(&d, 8, Criterion::Entropy, 2).unwrap();
        assert!(forest.trees.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn separable_blobs_classify_cleanly() {
        let train = blob_dataset(150, 6, 5.0, 1.0, 41);
        let test = blob_dataset(60, 6, 5.0, 1.0, 43);
        let forest = RandomForestModel::fit(&train, 30, Criterion::Gini, 3).unwrap();
        let predictions = forest.predict(&test.features).unwrap();
        let correct =
            predictions.iter().zip(&test.labels).filter(|(p, l)| p == l).count();
        assert!(correct as f64 / test.labels.len() as f64 >= 0.99);
    }

    #[test]
    fn single_class_training_always_predicts_that_class() {
        let d = Dataset {
            features: vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
            labels: vec![1, 1, 1],
            feature_names: vec!["a".into(), "b".into()],
        };
        let forest = RandomForestModel::fit(&d, 5, Criterion::Gini, 0).unwrap();
        assert_eq!(
            forest.predict(&[vec![0.0, 0.0], vec![9.0, 9.0]]).unwrap(),
            vec![1, 1]
        );
    }

    #[test]
    fn an_even_tied_vote_goes_to_class_zero() {
        // Two training rows with opposite labels and an even tree count: a
        // query at one of the rows can still split the vote because each
        // bootstrap may contain only one of the rows. Force the situation
        // directly with two stump trees that disagree everywhere.
        use crate::classifiers::tree::Node;
        let always = |label: u8| {
            DecisionTree::from_nodes(vec![Node::Leaf { label, counts: [1, 1] }]).unwrap()
        };
        let forest =
            RandomForestModel::from_parts(vec![always(0), always(1)], Criterion::Gini, 1)
                .unwrap();
        assert_eq!(forest.predict(&[vec![0.0]]).unwrap(), vec![0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = blob_dataset(10, 2, 3.0, 1.0, 51);
        assert!(matches!(
            RandomForestModel::fit(&d, 0, Criterion::Gini, 0),
            Err(ClassifierError::NoTrees)
        ));
        let forest = RandomForestModel::fit(&d, 3, Criterion::Gini, 0).unwrap();
        assert!(matches!(
            forest.predict(&[vec![1.0, 2.0, 3.0]]),
            Err(ClassifierError::DimensionMismatch { got: 3, expected: 2 })
        ));
    }
}
