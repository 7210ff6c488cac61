//! A binary CART-style decision tree, grown greedily on impurity decrease.
//!
//! Nodes live in an arena `Vec` and children are created after their
//! parent, so child indices are always larger — the layout cannot contain a
//! cycle, and growth uses an explicit work stack instead of recursion, so
//! deep trees on large training sets cannot overflow the call stack.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use super::{impurity, ClassifierError, Criterion};

/// A split sends rows with `x[feature] <= threshold` to `left`, the rest to
/// `right`. A leaf predicts `label` and records the training counts that
/// reached it.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { label: u8, counts: [usize; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

/// The smallest impurity decrease that counts as a real improvement;
/// anything below is floating-point noise from the weighted-average
/// arithmetic.
const MIN_DECREASE: f64 = 1e-12;

impl DecisionTree {
    /// Grows a tree on `rows`/`labels` restricted to the given row indices.
    /// At each node, `feature_subsample` features are drawn without
    /// replacement from `rng` and only those are scanned for the best
    /// threshold; equally good splits resolve to the lowest feature index
    /// and then the lowest threshold. A node becomes a leaf when it is
    /// pure, has fewer than two rows, or no candidate split strictly
    /// decreases impurity. Leaf label ties break toward class 0.
    pub fn grow(
        rows: &[Vec<f64>],
        labels: &[u8],
        row_indices: Vec<usize>,
        criterion: Criterion,
        feature_subsample: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<DecisionTree, ClassifierError> {
        if row_indices.is_empty() {
            return Err(ClassifierError::EmptyTrainingSet);
        }
        let n_features = rows[0].len();
        let m = feature_subsample.clamp(1, n_features);

        let mut nodes: Vec<Node> = vec![Node::Leaf { label: 0, counts: [0, 0] }];
        let mut work: Vec<(usize, Vec<usize>)> = vec![(0, row_indices)];

        while let Some((slot, indices)) = work.pop() {
            let counts = class_counts(labels, &indices);
            let parent_impurity = impurity(counts, criterion)?;
            let split = if counts[0] == 0 || counts[1] == 0 || indices.len() < 2 {
                None
            } else {
                // Features are drawn from the rng, then scanned in ascending
                // order so the tie-break never depends on draw order.
                let mut features = sample(rng, n_features, m).into_vec();
                features.sort_unstable();
                best_split(rows, labels, &indices, &features, parent_impurity, criterion)?
            };
            match split {
                Some((feature, threshold)) => {
                    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                        indices.iter().partition(|&&i| rows[i][feature] <= threshold);
                    let left = nodes.len();
                    let right = nodes.len() + 1;
                    nodes.push(Node::Leaf { label: 0, counts: [0, 0] });
                    nodes.push(Node::Leaf { label: 0, counts: [0, 0] });
                    nodes[slot] = Node::Split { feature, threshold, left, right };
                    work.push((left, left_rows));
                    work.push((right, right_rows));
                }
                None => {
                    nodes[slot] =
                        Node::Leaf { label: u8::from(counts[1] > counts[0]), counts };
                }
            }
        }
        Ok(DecisionTree { nodes })
    }

    /// Rebuilds a tree from parsed nodes, enforcing the arena invariant
    /// (children strictly after their parent and in range).
    pub fn from_nodes(nodes: Vec<Node>) -> Result<DecisionTree, ClassifierError> {
        if nodes.is_empty() {
            return Err(ClassifierError::ModelParse {
                line: 0,
                message: "a tree needs at least one node".into(),
            });
        }
        for (i, node) in nodes.iter().enumerate() {
            if let Node::Split { left, right, .. } = *node {
                if left <= i || right <= i || left >= nodes.len() || right >= nodes.len() {
                    return Err(ClassifierError::ModelParse {
                        line: 0,
                        message: format!(
                            "split node {i} references children {left}/{right} out of order"
                        ),
                    });
                }
            }
        }
        Ok(DecisionTree { nodes })
    }

    /// Walks the tree for a single row.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { label, .. } => return label,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// Largest feature index referenced by any split, if the tree splits at
    /// all — used to validate reloaded models.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Split { feature, .. } => Some(feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

fn class_counts(labels: &[u8], indices: &[usize]) -> [usize; 2] {
    let ones = indices.iter().filter(|&&i| labels[i] == 1).count();
    [indices.len() - ones, ones]
}

/// Scans the candidate features for the threshold with the best impurity
/// decrease. Returns `None` when nothing beats the parent by more than
/// [`MIN_DECREASE`].
fn best_split(
    rows: &[Vec<f64>],
    labels: &[u8],
    indices: &[usize],
    features: &[usize],
    parent_impurity: f64,
    criterion: Criterion,
) -> Result<Option<(usize, f64)>, ClassifierError> {
    let n = indices.len();
    let total = class_counts(labels, indices);
    let mut best: Option<(f64, usize, f64)> = None; // (decrease, feature, threshold)

    for &feature in features {
        let mut ordered: Vec<(f64, u8)> =
            indices.iter().map(|&i| (rows[i][feature], labels[i])).collect();
        ordered.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0usize; 2];
        for i in 1..n {
            left[ordered[i - 1].1 as usize] += 1;
            let (a, b) = (ordered[i - 1].0, ordered[i].0);
            if a == b {
                continue; // not a boundary between distinct values
            }
            // Midpoint, unless rounding pushes it onto `b` — then fall back
            // to `a` so the left branch still receives everything ≤ a.
            let mut threshold = (a + b) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let wl = i as f64 / n as f64;
            let wr = 1.0 - wl;
            let decrease = parent_impurity
                - wl * impurity(left, criterion)?
                - wr * impurity(right, criterion)?;
            if decrease > MIN_DECREASE
                && best.is_none_or(|(d, _, _)| decrease > d)
            {
                best = Some((decrease, feature, threshold));
            }
        }
    }
    Ok(best.map(|(_, feature, threshold)| (feature, threshold)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn grow_all(
        rows: &[Vec<f64>],
        labels: &[u8],
        criterion: Criterion,
        seed: u64,
    ) -> DecisionTree {
        let n_features = rows[0].len();
        let mut rng = stream_rng(seed, 0);
        DecisionTree::grow(
            rows,
            labels,
            (0..rows.len()).collect(),
            criterion,
            n_features,
            &mut rng,
        )
        .unwrap()
    }

    #[test]
    fn one_dimensional_step_splits_at_the_midpoint() {
        let rows = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]];
        let labels = vec![0, 0, 1, 1];
        let tree = grow_all(&rows, &labels, Criterion::Gini, 1);
        assert_eq!(tree.nodes.len(), 3);
        match tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert!((threshold - 0.5).abs() < 1e-12);
            }
            ref other => panic!("expected a split at the root, got {other:?}"),
        }
        assert_eq!(tree.predict_row(&[0.2]), 0);
        assert_eq!(tree.predict_row(&[0.5]), 0); // boundary goes left
        assert_eq!(tree.predict_row(&[0.8]), 1);
    }

    #[test]
    fn pure_input_is_a_single_leaf() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let tree = grow_all(&rows, &[1, 1, 1], Criterion::Entropy, 1);
        assert_eq!(tree.nodes, vec![Node::Leaf { label: 1, counts: [0, 3] }]);
    }

    #[test]
    fn unsplittable_impure_node_votes_with_tie_to_zero() {
        // Identical rows with conflicting labels: no boundary exists.
        let rows = vec![vec![2.0, 7.0], vec![2.0, 7.0]];
        let tree = grow_all(&rows, &[1, 0], Criterion::Gini, 5);
        assert_eq!(tree.nodes, vec![Node::Leaf { label: 0, counts: [1, 1] }]);
    }

    #[test]
    fn splits_prefer_the_lower_feature_index_on_ties() {
        // Feature 0 and feature 1 both separate the classes perfectly.
        let rows = vec![vec![0.0, 10.0], vec![0.0, 10.0], vec![1.0, 20.0], vec![1.0, 20.0]];
        let labels = vec![0, 0, 1, 1];
        let tree = grow_all(&rows, &labels, Criterion::Gini, 9);
        match tree.nodes[0] {
            Node::Split { feature, .. } => assert_eq!(feature, 0),
            ref other => panic!("expected a split, got {other:?}"),
        }
    }

    #[test]
    fn xor_needs_two_levels_and_gets_them() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let labels = vec![0, 1, 1, 0];
        // XOR has no single split with positive Gini decrease at the root
        // when both halves stay 50/50 — but a 1/3-vs-3 entropy... in fact
        // any axis split leaves both sides mixed 1:1, so the greedy scan
        // finds zero decrease and the root becomes a leaf. Verify that the
        // tree stays honest (no fake split) rather than looping.
        let tree = grow_all(&rows, &labels, Criterion::Gini, 2);
        assert_eq!(tree.nodes.len(), 1);
    }

    #[test]
    fn adjacent_denormal_values_fall_back_to_the_lower_bound() {
        // Midpoint of two adjacent floats rounds up to the larger one; the
        // threshold must then be the smaller value so `<=` still splits.
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let rows = vec![vec![a], vec![b]];
        let tree = grow_all(&rows, &[0, 1], Criterion::Gini, 3);
        match tree.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(threshold, a),
            ref other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(tree.predict_row(&[a]), 0);
        assert_eq!(tree.predict_row(&[b]), 1);
    }

    #[test]
    fn growth_is_deterministic_for_a_fixed_seed() {
        let d = crate::classifiers::blob_dataset(40, 6, 2.0, 1.0, 13);
        let grow = |seed| {
            let mut rng = stream_rng(seed, 0);
            DecisionTree::grow(
                &d.features,
                &d.labels,
                (0..d.len()).collect(),
                Criterion::Entropy,
                3,
                &mut rng,
            )
            .unwrap()
        };
        assert_eq!(grow(77), grow(77));
        // Different seeds sample different feature subsets.
        assert_ne!(grow(77), grow(78));
    }

    #[test]
    fn from_nodes_rejects_backward_references() {
        let cyclic = vec![
            Node::Split { feature: 0, threshold: 0.5, left: 1, right: 0 },
            Node::Leaf { label: 0, counts: [1, 0] },
        ];
        assert!(DecisionTree::from_nodes(cyclic).is_err());
        assert!(DecisionTree::from_nodes(vec![]).is_err());
        let out_of_range = vec![Node::Split { feature: 0, threshold: 0.5, left: 1, right: 9 }];
        assert!(DecisionTree::from_nodes(out_of_range).is_err());
    }

    #[test]
    fn perfectly_separable_data_is_memorized() {
        let d = crate::classifiers::blob_dataset(50, 3, 8.0, 1.0, 17);
        let tree = grow_all(&d.features, &d.labels, Criterion::Gini, 19);
        let hits = d
            .features
            .iter()
            .zip(&d.labels)
            .filter(|(row, &l)| tree.predict_row(row) == l)
            .count();
        assert_eq!(hits, d.len());
    }
}
