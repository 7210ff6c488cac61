//! Binary classifiers: k-nearest-neighbors and a random forest, plus a
//! plain-text model format so a fitted model can be written next to the run
//! report and reloaded exactly.
//!
//! Both classifiers are implemented here directly — their behaviour under
//! ties, degenerate splits, and reseeding is part of this crate's contract,
//! so it cannot be delegated to an external implementation.

mod forest;
mod knn;
mod tree;

pub use forest::RandomForestModel;
pub use knn::KnnModel;
pub use tree::{DecisionTree, Node};

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::data::Dataset;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k must be at least 1")]
    BadK,
    #[error("a forest needs at least one tree")]
    NoTrees,
    #[error("query has {got} features but the model was fitted on {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("class counts must not both be zero")]
    EmptyImpurity,
    #[error("model text is malformed at line {line}: {message}")]
    ModelParse { line: usize, message: String },
}

/// Split-quality measure for tree induction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    pub fn id(self) -> &'static str {
        match self {
            Criterion::Gini => "gini",
            Criterion::Entropy => "entropy",
        }
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gini" => Ok(Criterion::Gini),
            "entropy" => Ok(Criterion::Entropy),
            other => Err(format!("unknown split criterion {other:?}")),
        }
    }
}

/// Node impurity of a two-class count pair. Gini is `1 − p₀² − p₁²`,
/// entropy is in bits; both are 0 for a pure node and maximal at a 50/50
/// split.
pub fn impurity(counts: [usize; 2], criterion: Criterion) -> Result<f64, ClassifierError> {
    let total = counts[0] + counts[1];
    if total == 0 {
        return Err(ClassifierError::EmptyImpurity);
    }
    let p0 = counts[0] as f64 / total as f64;
    let p1 = counts[1] as f64 / total as f64;
    Ok(match criterion {
        Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
        Criterion::Entropy => {
            let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
            term(p0) + term(p1)
        }
    })
}

/// Classifier family plus its tunable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HyperParams {
    Knn { k: usize },
    RandomForest { trees: usize, criterion: Criterion },
}

impl HyperParams {
    pub fn describe(&self) -> String {
        match *self {
            HyperParams::Knn { k } => format!("knn k={k}"),
            HyperParams::RandomForest { trees, criterion } => {
                format!("rf trees={trees} criterion={}", criterion.id())
            }
        }
    }
}

/// A fitted model of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Knn(KnnModel),
    Forest(RandomForestModel),
}

impl Model {
    /// Fits the requested model. `seed` drives all forest randomness
    /// (bootstrap draws and per-node feature subsets); k-NN is
    /// deterministic and ignores it.
    pub fn fit(train: &Dataset, hp: HyperParams, seed: u64) -> Result<Model, ClassifierError> {
        match hp {
            HyperParams::Knn { k } => Ok(Model::Knn(KnnModel::fit(train, k)?)),
            HyperParams::RandomForest { trees, criterion } => {
                Ok(Model::Forest(RandomForestModel::fit(train, trees, criterion, seed)?))
            }
        }
    }

    /// Predicts a label for each row.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>, ClassifierError> {
        match self {
            Model::Knn(m) => m.predict(rows),
            Model::Forest(m) => m.predict(rows),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Knn(m) => m.n_features(),
            Model::Forest(m) => m.n_features(),
        }
    }

    /// Serializes the model as line-oriented text. Floats use the shortest
    /// representation that round-trips, so save → load is exact.
    pub fn to_text(&self) -> String {
        let mut out = String::from("nids-model v1\n");
        match self {
            Model::Knn(m) => {
                let _ = writeln!(out, "knn k={} features={} rows={}", m.k, m.n_features(), m.len());
                for (row, &label) in m.rows.iter().zip(&m.labels) {
                    let cells: Vec<String> = row.iter().map(f64::to_string).collect();
                    let _ = writeln!(out, "row label={} {}", label, cells.join(" "));
                }
            }
            Model::Forest(m) => {
                let _ = writeln!(
                    out,
                    "forest trees={} criterion={} features={}",
                    m.trees.len(),
                    m.criterion.id(),
                    m.n_features()
                );
                for tree in &m.trees {
                    let _ = writeln!(out, "tree nodes={}", tree.nodes.len());
                    for node in &tree.nodes {
                        match *node {
                            Node::Split { feature, threshold, left, right } => {
                                let _ = writeln!(
                                    out,
                                    "split f={feature} t={threshold} l={left} r={right}"
                                );
                            }
                            Node::Leaf { label, counts } => {
                                let _ = writeln!(
                                    out,
                                    "leaf label={label} c0={} c1={}",
                                    counts[0], counts[1]
                                );
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Parses the text produced by [`Model::to_text`].
    pub fn from_text(text: &str) -> Result<Model, ClassifierError> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, message: String| ClassifierError::ModelParse {
            line: line + 1,
            message,
        };

        let (i, header) = lines
            .next()
            .ok_or_else(|| parse_err(0, "empty model text".into()))?;
        if header.trim() != "nids-model v1" {
            return Err(parse_err(i, format!("unknown model header {header:?}")));
        }
        let (i, kind_line) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing model body".into()))?;
        let fields = parse_fields(kind_line);

        match fields.first().map(String::as_str) {
            Some("knn") => {
                let k = field_value(&fields, "k", i)?;
                let n_features: usize = field_value(&fields, "features", i)?;
                let n_rows: usize = field_value(&fields, "rows", i)?;
                let mut rows = Vec::with_capacity(n_rows);
                let mut labels = Vec::with_capacity(n_rows);
                for _ in 0..n_rows {
                    let (j, line) = lines
                        .next()
                        .ok_or_else(|| parse_err(i + 1, "model text ends mid-table".into()))?;
                    let parts: Vec<&str> = line.split_whitespace().collect();
                    if parts.first() != Some(&"row") || parts.len() != 2 + n_features {
                        return Err(parse_err(j, format!("expected a {n_features}-feature row")));
                    }
                    let label = parts[1]
                        .strip_prefix("label=")
                        .and_then(|v| v.parse::<u8>().ok())
                        .ok_or_else(|| parse_err(j, "bad row label".into()))?;
                    let mut row = Vec::with_capacity(n_features);
                    for cell in &parts[2..] {
                        row.push(
                            cell.parse::<f64>()
                                .map_err(|e| parse_err(j, format!("bad cell {cell:?}: {e}")))?,
                        );
                    }
                    labels.push(label);
                    rows.push(row);
                }
                KnnModel::from_parts(k, n_features, rows, labels)
                    .map(Model::Knn)
                    .map_err(|e| parse_err(i, e.to_string()))
            }
            Some("forest") => {
                let n_trees: usize = field_value(&fields, "trees", i)?;
                let criterion: String = field_value(&fields, "criterion", i)?;
                let criterion =
                    Criterion::from_str(&criterion).map_err(|e| parse_err(i, e))?;
                let n_features: usize = field_value(&fields, "features", i)?;
                let mut trees = Vec::with_capacity(n_trees);
                for _ in 0..n_trees {
                    let (j, line) = lines
                        .next()
                        .ok_or_else(|| parse_err(i + 1, "model text ends mid-forest".into()))?;
                    let tree_fields = parse_fields(line);
                    if tree_fields.first().map(String::as_str) != Some("tree") {
                        return Err(parse_err(j, format!("expected a tree header, got {line:?}")));
                    }
                    let n_nodes: usize = field_value(&tree_fields, "nodes", j)?;
                    let mut nodes = Vec::with_capacity(n_nodes);
                    for _ in 0..n_nodes {
                        let (l, line) = lines
                            .next()
                            .ok_or_else(|| parse_err(j, "model text ends mid-tree".into()))?;
                        let nf = parse_fields(line);
                        match nf.first().map(String::as_str) {
                            Some("split") => nodes.push(Node::Split {
                                feature: field_value(&nf, "f", l)?,
                                threshold: field_value(&nf, "t", l)?,
                                left: field_value(&nf, "l", l)?,
                                right: field_value(&nf, "r", l)?,
                            }),
                            Some("leaf") => nodes.push(Node::Leaf {
                                label: field_value(&nf, "label", l)?,
                                counts: [
                                    field_value(&nf, "c0", l)?,
                                    field_value(&nf, "c1", l)?,
                                ],
                            }),
                            _ => {
                                return Err(parse_err(l, format!("unknown node line {line:?}")))
                            }
                        }
                    }
                    trees.push(
                        DecisionTree::from_nodes(nodes)
                            .map_err(|e| parse_err(j, e.to_string()))?,
                    );
                }
                RandomForestModel::from_parts(trees, criterion, n_features)
                    .map(Model::Forest)
                    .map_err(|e| parse_err(i, e.to_string()))
            }
            _ => Err(parse_err(i, format!("unknown model kind line {kind_line:?}"))),
        }
    }
}

/// Splits a line into its leading word and `key=value` tokens, keeping both
/// as raw strings for typed extraction by [`field_value`].
fn parse_fields(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_string).collect()
}

fn field_value<T: FromStr>(
    fields: &[String],
    key: &str,
    line: usize,
) -> Result<T, ClassifierError> {
    let prefix = format!("{key}=");
    fields
        .iter()
        .find_map(|f| f.strip_prefix(&prefix))
        .and_then(|v| v.parse::<T>().ok())
        .ok_or_else(|| ClassifierError::ModelParse {
            line: line + 1,
            message: format!("missing or malformed field {key:?}"),
        })
}

#[cfg(test)]
pub(crate) fn blob_dataset(
    n_per_class: usize,
    n_features: usize,
    separation: f64,
    noise: f64,
    seed: u64,
) -> Dataset {
    use crate::rng::{sample_standard_normal, stream_rng};

    let mut rng = stream_rng(seed, 900);
    let mut features = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for class in 0..2u8 {
        let center = if class == 0 { 0.0 } else { separation };
        for _ in 0..n_per_class {
            features.push(
                (0..n_features)
                    .map(|_| center + noise * sample_standard_normal(&mut rng))
                    .collect(),
            );
            labels.push(class);
        }
    }
    Dataset {
        features,
        labels,
        feature_names: (0..n_features).map(|j| format!("f{j}")).collect(),
    }
}
