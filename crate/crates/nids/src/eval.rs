//! Model evaluation: confusion-matrix metrics, k-fold cross-validation,
//! learning curves with a minimum-training-size estimate, and a 2-component
//! PCA projection for visualisation.
//!
//! Class 1 is the positive (attack) class throughout. Degenerate metric
//! denominators (no positives in the truth, no predicted positives, no
//! negatives) do not error out — the metric reports 0 with its `*_defined`
//! flag cleared, so callers can render "n/a" instead of a misleading zero.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::classifiers::{ClassifierError, HyperParams, Model};
use crate::data::Dataset;
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction and truth lengths differ: {got} vs {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("labels must be binary; found value {0}")]
    NonBinaryLabel(u8),
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("{folds}-fold CV needs at least {folds} rows and 2 folds; have {rows} rows")]
    BadFolds { folds: usize, rows: usize },
    #[error("invalid learning-curve fractions: {0}")]
    BadFractions(String),
    #[error(
        "learning-curve subsample sizes must strictly increase; got {previous} then {current}"
    )]
    NonIncreasingSizes { previous: usize, current: usize },
    #[error("learning curve has no points")]
    EmptyCurve,
    #[error("projection needs at least 2 feature columns, have {0}")]
    TooFewFeatures(usize),
    #[error("projection rows have inconsistent widths: {got} vs {expected}")]
    RaggedRows { got: usize, expected: usize },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Two-class confusion counts. Class 1 (attack) is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub true_positive: usize,
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_positive + self.true_negative + self.false_positive + self.false_negative
    }
}

/// Headline metrics plus definedness flags for the ratio metrics whose
/// denominator can be empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    /// tp / (tp + fp) — of the flagged flows, how many were attacks.
    pub precision: f64,
    /// tp / (tp + fn) — of the attacks, how many were flagged.
    pub recall: f64,
    /// fp / (tn + fp) — of the benign flows, how many were falsely flagged.
    pub far: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub far_defined: bool,
}

/// Tallies predictions against ground truth.
pub fn confusion(predictions: &[u8], truth: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch { got: predictions.len(), expected: truth.len() });
    }
    if predictions.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        if p > 1 {
            return Err(EvalError::NonBinaryLabel(p));
        }
        if t > 1 {
            return Err(EvalError::NonBinaryLabel(t));
        }
        match (p, t) {
            (1, 1) => cm.true_positive += 1,
            (0, 0) => cm.true_negative += 1,
            (1, 0) => cm.false_positive += 1,
            (0, 1) => cm.false_negative += 1,
            _ => unreachable!("labels validated binary"),
        }
    }
    Ok(cm)
}

/// Computes the metric set from confusion counts.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyEvaluation);
    }
    let ratio = |num: usize, den: usize| -> (f64, bool) {
        if den == 0 {
            (0.0, false)
        } else {
            (num as f64 / den as f64, true)
        }
    };
    let (precision, precision_defined) =
        ratio(cm.true_positive, cm.true_positive + cm.false_positive);
    let (recall, recall_defined) =
        ratio(cm.true_positive, cm.true_positive + cm.false_negative);
    let (far, far_defined) = ratio(cm.false_positive, cm.true_negative + cm.false_positive);
    Ok(MetricsReport {
        accuracy: (cm.true_positive + cm.true_negative) as f64 / total as f64,
        precision,
        recall,
        far,
        precision_defined,
        recall_defined,
        far_defined,
    })
}

/// Convenience: fit-free accuracy of a prediction vector.
pub fn accuracy(predictions: &[u8], truth: &[u8]) -> Result<f64, EvalError> {
    Ok(metrics(&confusion(predictions, truth)?)?.accuracy)
}

/// Splits `0..n` into `folds` disjoint index sets: one seeded shuffle, then
/// contiguous chunks, with the first `n % folds` folds one element larger.
pub(crate) fn fold_partition(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut at = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(indices[at..at + size].to_vec());
        at += size;
    }
    out
}

/// Mean held-out accuracy over `folds` folds. Fold `f` trains on everything
/// outside it with a model seeded by `(seed, f + 1)`; folds evaluate in
/// parallel but average in fold order, so the result is independent of
/// thread count.
pub fn kfold_cv(
    d: &Dataset,
    hp: HyperParams,
    folds: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    if folds < 2 || folds > d.len() {
        return Err(EvalError::BadFolds { folds, rows: d.len() });
    }
    let partition = fold_partition(d.len(), folds, seed);
    let accuracies: Vec<f64> = partition
        .par_iter()
        .enumerate()
        .map(|(f, held_out)| {
            let mut in_fold = vec![false; d.len()];
            for &i in held_out {
                in_fold[i] = true;
            }
            let train_indices: Vec<usize> = (0..d.len()).filter(|&i| !in_fold[i]).collect();
            let train = d.subset(&train_indices);
            let test = d.subset(held_out);
            let model = Model::fit(&train, hp, derive_seed(seed, f as u64 + 1))?;
            accuracy(&model.predict(&test.features)?, &test.labels)
        })
        .collect::<Result<_, _>>()?;
    Ok(accuracies.iter().sum::<f64>() / folds as f64)
}

/// One learning-curve sample: accuracy on the training subsample itself and
/// under cross-validation at that size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub train_size: usize,
    pub train_acc: f64,
    pub cv_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
    pub folds: usize,
    pub seed: u64,
}

/// Gap between resubstitution and cross-validated accuracy — large values
/// mean the model memorizes more than it generalizes at that size.
pub fn overfit_gap(p: &CurvePoint) -> f64 {
    p.train_acc - p.cv_acc
}

/// Sweeps training-set sizes given as fractions of `d` (strictly ascending,
/// each in (0, 1]) and measures train/CV accuracy at each size.
///
/// Subsamples are stratified and nested per point via seed stream `(seed,
/// point)`, but cross-validation inside every point reuses the caller's
/// `seed` — so the fraction-1.0 point reproduces [`kfold_cv`] on the full
/// set bit for bit.
pub fn learning_curve(
    d: &Dataset,
    hp: HyperParams,
    fractions: &[f64],
    folds: usize,
    seed: u64,
) -> Result<LearningCurve, EvalError> {
    if fractions.is_empty() {
        return Err(EvalError::BadFractions("no fractions given".into()));
    }
    for pair in fractions.windows(2) {
        if pair[1] <= pair[0] {
            return Err(EvalError::BadFractions(format!(
                "fractions must strictly ascend; got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if let Some(&bad) = fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(EvalError::BadFractions(format!("fraction {bad} outside (0, 1]")));
    }

    let mut points = Vec::with_capacity(fractions.len());
    let mut previous_size = 0usize;
    for (point, &fraction) in fractions.iter().enumerate() {
        let point_seed = derive_seed(seed, point as u64);
        let mut chosen: Vec<usize> = Vec::new();
        for class in 0..2u8 {
            let mut class_indices: Vec<usize> = (0..d.len())
                .filter(|&i| d.labels[i] == class)
                .collect();
            if class_indices.is_empty() {
                continue;
            }
            let take = ((fraction * class_indices.len() as f64).round() as usize)
                .clamp(1, class_indices.len());
            let mut rng = stream_rng(point_seed, class as u64);
            class_indices.shuffle(&mut rng);
            chosen.extend_from_slice(&class_indices[..take]);
        }
        // Restore dataset order so a full-fraction subsample IS the dataset.
        chosen.sort_unstable();
        if chosen.len() <= previous_size {
            return Err(EvalError::NonIncreasingSizes {
                previous: previous_size,
                current: chosen.len(),
            });
        }
        previous_size = chosen.len();

        let subset = d.subset(&chosen);
        let cv_acc = kfold_cv(&subset, hp, folds, seed)?;
        let model = Model::fit(&subset, hp, derive_seed(seed, 0))?;
        let train_acc = accuracy(&model.predict(&subset.features)?, &subset.labels)?;
        points.push(CurvePoint { train_size: subset.len(), train_acc, cv_acc });
    }
    Ok(LearningCurve { points, folds, seed })
}

/// Smallest sampled training size whose CV accuracy already matches the
/// final point within `epsilon` *and* whose overfit gap is at most
/// `5 · epsilon`. Only points before the last can qualify — the last point
/// alone is no evidence the curve has flattened — so the fallback is
/// `(largest size, false)`.
pub fn minimum_training_size(
    curve: &LearningCurve,
    epsilon: f64,
) -> Result<(usize, bool), EvalError> {
    let points = &curve.points;
    let last = points.last().ok_or(EvalError::EmptyCurve)?;
    for p in &points[..points.len() - 1] {
        if (p.cv_acc - last.cv_acc).abs() <= epsilon && overfit_gap(p) <= 5.0 * epsilon {
            return Ok((p.train_size, true));
        }
    }
    Ok((last.train_size, false))
}

/// First two principal components of a feature matrix, with the per-row
/// projection and explained-variance ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca2 {
    pub components: [Vec<f64>; 2],
    pub explained: [f64; 2],
    pub projection: Vec<[f64; 2]>,
}

/// Power-iteration PCA to exactly two components.
///
/// Components are unit length, mutually orthogonal, and sign-fixed (the
/// largest-magnitude coordinate is positive), so the output is fully
/// deterministic. Degenerate inputs stay well-defined: a constant matrix
/// projects to the first two axes with zero explained variance, and a
/// rank-1 matrix gets a deterministic orthogonal second axis.
pub fn pca2(rows: &[Vec<f64>]) -> Result<Pca2, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    let p = rows[0].len();
    if p < 2 {
        return Err(EvalError::TooFewFeatures(p));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != p) {
        return Err(EvalError::RaggedRows { got: bad.len(), expected: p });
    }
    let n = rows.len() as f64;
    let means: Vec<f64> =
        (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&means).map(|(x, m)| x - m).collect())
        .collect();

    // Population covariance, computed once; p is small after selection.
    let mut cov = vec![vec![0.0; p]; p];
    for row in &centered {
        for j in 0..p {
            for l in j..p {
                cov[j][l] += row[j] * row[l];
            }
        }
    }
    for j in 0..p {
        for l in j..p {
            cov[j][l] /= n;
            cov[l][j] = cov[j][l];
        }
    }
    let trace: f64 = (0..p).map(|j| cov[j][j]).sum();
    if trace <= f64::MIN_POSITIVE {
        // No variance anywhere: centered data is identically zero.
        let mut e0 = vec![0.0; p];
        let mut e1 = vec![0.0; p];
        e0[0] = 1.0;
        e1[1] = 1.0;
        return Ok(Pca2 {
            components: [e0, e1],
            explained: [0.0, 0.0],
            projection: vec![[0.0, 0.0]; rows.len()],
        });
    }

    let tiny = trace * 1e-14;
    let first_starts = standard_starts(p, None);
    let v1 = power_iterate(&cov, &first_starts, None, tiny)
        .expect("a PSD matrix with positive trace has a reachable top eigenvector");
    let lambda1 = rayleigh(&cov, &v1);

    // Deflate and pull the second component, keeping it orthogonal to the
    // first at every step.
    let mut deflated = cov.clone();
    for j in 0..p {
        for l in 0..p {
            deflated[j][l] -= lambda1 * v1[j] * v1[l];
        }
    }
    let second_starts = standard_starts(p, Some(&v1));
    let v2 = match power_iterate(&deflated, &second_starts, Some(&v1), tiny) {
        Some(v2) => v2,
        // Rank-1 covariance: any unit vector orthogonal to v1 is a valid
        // zero-variance second axis; take the deterministic one.
        None => second_starts.into_iter().next().expect("p >= 2 yields a start"),
    };
    let lambda2 = rayleigh(&cov, &v2).max(0.0);

    let fix = |mut v: Vec<f64>| {
        let lead = (0..p)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .expect("component is non-empty");
        if v[lead] < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        v
    };
    let v1 = fix(v1);
    let v2 = fix(v2);

    let projection = centered
        .iter()
        .map(|row| [dot(row, &v1), dot(row, &v2)])
        .collect();
    Ok(Pca2 {
        explained: [
            (lambda1 / trace).clamp(0.0, 1.0),
            (lambda2 / trace).clamp(0.0, 1.0),
        ],
        components: [v1, v2],
        projection,
    })
}

/// Candidate start vectors: the uniform direction, then each basis vector.
/// With `against` set, every candidate is first orthogonalized to it;
/// candidates that collapse to (near) zero are dropped.
fn standard_starts(p: usize, against: Option<&[f64]>) -> Vec<Vec<f64>> {
    let mut starts = Vec::with_capacity(p + 1);
    let uniform = vec![1.0 / (p as f64).sqrt(); p];
    for candidate in std::iter::once(uniform).chain((0..p).map(|j| {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        e
    })) {
        let mut v = candidate;
        if let Some(base) = against {
            let overlap = dot(&v, base);
            for (x, b) in v.iter_mut().zip(base) {
                *x -= overlap * b;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            for x in &mut v {
                *x /= norm;
            }
            starts.push(v);
        }
    }
    if let Some(base) = against {
        // Prefer the start least aligned with the first component: the
        // basis vector at the first component's smallest-magnitude entry.
        starts.sort_by(|a, b| {
            dot(a, base).abs().total_cmp(&dot(b, base).abs())
        });
    }
    starts
}

/// Runs power iteration from the first start that is not annihilated by the
/// matrix. Returns `None` when every start lands in the kernel — for a PSD
/// matrix that means it is (numerically) zero.
fn power_iterate(
    matrix: &[Vec<f64>],
    starts: &[Vec<f64>],
    keep_orthogonal_to: Option<&[f64]>,
    tiny: f64,
) -> Option<Vec<f64>> {
    const MAX_ITERATIONS: usize = 10_000;
    const TOLERANCE: f64 = 1e-9;

    'starts: for start in starts {
        let mut v = start.clone();
        for _ in 0..MAX_ITERATIONS {
            let mut w = mat_vec(matrix, &v);
            if let Some(base) = keep_orthogonal_to {
                let overlap = dot(&w, base);
                for (x, b) in w.iter_mut().zip(base) {
                    *x -= overlap * b;
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm <= tiny {
                continue 'starts;
            }
            for x in &mut w {
                *x /= norm;
            }
            let delta: f64 = v
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            v = w;
            if delta < TOLERANCE {
                break;
            }
        }
        return Some(v);
    }
    None
}

fn mat_vec(matrix: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    matrix.iter().map(|row| dot(row, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rayleigh(matrix: &[Vec<f64>], v: &[f64]) -> f64 {
    dot(&mat_vec(matrix, v), v)
}
