//! Feature ranking and selection.
//!
//! Two scorers are provided: mutual information between a (discretized)
//! feature and the class ("igbfs" in configs), and absolute Pearson
//! correlation with the class ("cbfs"). The correlation path also offers a
//! greedy subset search that maximizes the classic correlation-merit ratio
//! instead of cutting a ranking. [`project`] then restricts a dataset to the
//! chosen columns.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::data::Dataset;

#[derive(Debug, Error)]
pub enum FeatureSelectionError {
    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} samples, have {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("labels must be binary; found value {0}")]
    NonBinaryLabel(u8),
    #[error("dataset has no rows or no features")]
    EmptyDataset,
    #[error("discretization needs at least 2 bins; got {0}")]
    BadBins(usize),
    #[error("invalid selection policy: {0}")]
    BadPolicy(String),
    #[error("selection policy kept zero features")]
    EmptySelection,
    #[error("merit of an empty feature subset is undefined")]
    EmptySubset,
    #[error(
        "merit is undefined for this subset (k = {k}, mean feature correlation {ff_mean}): \
         nonpositive radicand {radicand}"
    )]
    DegenerateMerit { k: usize, ff_mean: f64, radicand: f64 },
    #[error("feature index {index} out of range for {n_features} features")]
    OutOfRange { index: usize, n_features: usize },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// Equal-frequency binning request for continuous features. Ten bins is a
/// robust default for heavy-tailed flow statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscretizationSpec {
    pub bins: usize,
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        DiscretizationSpec { bins: 10 }
    }
}

/// Which scorer produced a selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMethod {
    /// Mutual information between the discretized feature and the class.
    InfoGain,
    /// Absolute Pearson correlation with the class.
    Correlation,
}

impl SelectionMethod {
    /// Identifier used in configs and reports.
    pub fn id(self) -> &'static str {
        match self {
            SelectionMethod::InfoGain => "igbfs",
            SelectionMethod::Correlation => "cbfs",
        }
    }
}

/// How the ranked score list is cut into a selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionPolicy {
    /// Keep the k best-scored features.
    TopK(usize),
    /// Keep every feature scoring at least `fraction · max_score`.
    RelativeThreshold(f64),
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy::RelativeThreshold(0.01)
    }
}

impl SelectionPolicy {
    fn validate(&self) -> Result<(), FeatureSelectionError> {
        match *self {
            SelectionPolicy::TopK(0) => {
                Err(FeatureSelectionError::BadPolicy("top-k requires k >= 1".into()))
            }
            SelectionPolicy::RelativeThreshold(t) if !(t > 0.0 && t <= 1.0) => Err(
                FeatureSelectionError::BadPolicy(format!(
                    "relative threshold must lie in (0, 1]; got {t}"
                )),
            ),
            _ => Ok(()),
        }
    }

    /// Describes the policy for reports, e.g. `top-k:31`.
    pub fn describe(&self) -> String {
        match *self {
            SelectionPolicy::TopK(k) => format!("top-k:{k}"),
            SelectionPolicy::RelativeThreshold(t) => format!("relative-threshold:{t}"),
        }
    }
}

/// Correlation-path variant: cut a ranking, or grow a subset greedily by
/// merit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationMode {
    #[default]
    Ranking,
    GreedyMerit,
}

/// One feature's score under the active method (bits for info gain,
/// absolute correlation otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScore {
    pub feature_index: usize,
    pub score: f64,
}

/// Outcome of a selection run: the kept feature indices (descending score)
/// plus the full ranked score list and the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub method: SelectionMethod,
    pub selected: Vec<usize>,
    pub scores: Vec<FeatureScore>,
    pub policy: SelectionPolicy,
    pub bins: Option<usize>,
    pub mode: Option<CorrelationMode>,
}

/// Shannon entropy in bits of a discrete value vector; empty input yields 0.
pub fn entropy(values: &[usize]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    let n = values.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Equal-frequency binning: cut points sit at the sorted `i·n/bins`
/// positions (duplicates collapsed), and a value's bin id is the number of
/// cut points at or below it. Monotone, deterministic, and at most `bins`
/// distinct ids.
pub fn discretize_equal_frequency(
    column: &[f64],
    bins: usize,
) -> Result<Vec<usize>, FeatureSelectionError> {
    if bins < 2 {
        return Err(FeatureSelectionError::BadBins(bins));
    }
    if column.is_empty() {
        return Ok(Vec::new());
    }
    let mut sorted = column.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let mut cuts: Vec<f64> = (1..bins).map(|i| sorted[i * n / bins]).collect();
    cuts.dedup_by(|a, b| a == b);
    Ok(column
        .iter()
        .map(|&x| cuts.iter().take_while(|&&c| c <= x).count())
        .collect())
}

/// Mutual information in bits between a continuous feature (discretized per
/// `disc`) and binary labels, from empirical joint frequencies.
pub fn mutual_information(
    feature: &[f64],
    labels: &[u8],
    disc: &DiscretizationSpec,
) -> Result<f64, FeatureSelectionError> {
    if feature.len() != labels.len() {
        return Err(FeatureSelectionError::LengthMismatch {
            left: feature.len(),
            right: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(FeatureSelectionError::NonBinaryLabel(bad));
    }
    let ids = discretize_equal_frequency(feature, disc.bins)?;
    let n = ids.len() as f64;
    if n == 0.0 {
        return Ok(0.0);
    }
    let mut joint: BTreeMap<(usize, u8), usize> = BTreeMap::new();
    let mut by_bin: BTreeMap<usize, usize> = BTreeMap::new();
    let mut by_class: BTreeMap<u8, usize> = BTreeMap::new();
    for (&s, &c) in ids.iter().zip(labels) {
        *joint.entry((s, c)).or_insert(0) += 1;
        *by_bin.entry(s).or_insert(0) += 1;
        *by_class.entry(c).or_insert(0) += 1;
    }
    let mut info = 0.0;
    for (&(s, c), &count) in &joint {
        let p_sc = count as f64 / n;
        let p_s = by_bin[&s] as f64 / n;
        let p_c = by_class[&c] as f64 / n;
        info += p_sc * (p_sc / (p_s * p_c)).log2();
    }
    Ok(info)
}

/// Pearson correlation coefficient, clamped to [−1, 1]. A constant column on
/// either side yields 0 — constant features carry no signal, and erroring
/// would break bulk scoring.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, FeatureSelectionError> {
    if x.len() != y.len() {
        return Err(FeatureSelectionError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(FeatureSelectionError::TooFewSamples { need: 2, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Ok(0.0);
    }
    Ok((cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// Merit of a feature subset: `k·r̄_cf / sqrt(k + k(k−1)·r̄_ff)`, where
/// `r̄_cf` is the mean absolute class–feature correlation of the subset and
/// `r̄_ff` the mean feature–feature correlation (signed, as given).
pub fn merit(
    class_feature_r: &[f64],
    feature_feature_mean: f64,
) -> Result<f64, FeatureSelectionError> {
    let k = class_feature_r.len();
    if k == 0 {
        return Err(FeatureSelectionError::EmptySubset);
    }
    let kf = k as f64;
    let r_cf = class_feature_r.iter().map(|r| r.abs()).sum::<f64>() / kf;
    let radicand = kf + kf * (kf - 1.0) * feature_feature_mean;
    if radicand <= 0.0 {
        return Err(FeatureSelectionError::DegenerateMerit {
            k,
            ff_mean: feature_feature_mean,
            radicand,
        });
    }
    Ok(kf * r_cf / radicand.sqrt())
}

/// Sorts feature indices by descending score, ties broken by lower index.
fn rank(scores: Vec<f64>) -> Vec<FeatureScore> {
    let mut ranked: Vec<FeatureScore> = scores
        .into_iter()
        .enumerate()
        .map(|(feature_index, score)| FeatureScore { feature_index, score })
        .collect();
    ranked.sort_by(|a, b| {
        b.score.total_cmp(&a.score).then(a.feature_index.cmp(&b.feature_index))
    });
    ranked
}

/// Applies a cut policy to a descending score list; the selection is always
/// a non-empty prefix.
fn cut(ranked: &[FeatureScore], policy: &SelectionPolicy) -> Result<Vec<usize>, FeatureSelectionError> {
    policy.validate()?;
    let keep = match *policy {
        SelectionPolicy::TopK(k) => k.min(ranked.len()),
        SelectionPolicy::RelativeThreshold(t) => {
            let floor = t * ranked[0].score;
            ranked.iter().take_while(|s| s.score >= floor).count()
        }
    };
    if keep == 0 {
        return Err(FeatureSelectionError::EmptySelection);
    }
    Ok(ranked[..keep].iter().map(|s| s.feature_index).collect())
}

/// Scores every feature by mutual information with the class and keeps the
/// winners per `policy`. Per-feature scoring runs in parallel; results are
/// reduced in feature order, so output never depends on thread count.
pub fn select_igbfs(
    d: &Dataset,
    disc: &DiscretizationSpec,
    policy: &SelectionPolicy,
) -> Result<SelectionResult, FeatureSelectionError> {
    if d.is_empty() || d.n_features() == 0 {
        return Err(FeatureSelectionError::EmptyDataset);
    }
    let scores: Vec<f64> = (0..d.n_features())
        .into_par_iter()
        .map(|j| mutual_information(&d.column(j), &d.labels, disc))
        .collect::<Result<_, _>>()?;
    let ranked = rank(scores);
    let selected = cut(&ranked, policy)?;
    Ok(SelectionResult {
        method: SelectionMethod::InfoGain,
        selected,
        scores: ranked,
        policy: *policy,
        bins: Some(disc.bins),
        mode: None,
    })
}

/// Scores every feature by |Pearson correlation| with the class. In ranking
/// mode the `policy` cuts the score list; in greedy-merit mode features are
/// added one at a time while the subset merit strictly improves (the policy
/// is recorded but plays no role). Either way `selected` is ordered by
/// descending correlation score.
pub fn select_cbfs(
    d: &Dataset,
    mode: CorrelationMode,
    policy: &SelectionPolicy,
) -> Result<SelectionResult, FeatureSelectionError> {
    if d.is_empty() || d.n_features() == 0 {
        return Err(FeatureSelectionError::EmptyDataset);
    }
    let labels_f: Vec<f64> = d.labels.iter().map(|&l| l as f64).collect();
    let columns: Vec<Vec<f64>> = (0..d.n_features()).map(|j| d.column(j)).collect();
    let cf: Vec<f64> = columns
        .par_iter()
        .map(|col| pearson(col, &labels_f))
        .collect::<Result<_, _>>()?;
    let ranked = rank(cf.iter().map(|r| r.abs()).collect());

    let selected = match mode {
        CorrelationMode::Ranking => cut(&ranked, policy)?,
        CorrelationMode::GreedyMerit => {
            policy.validate()?;
            greedy_merit(&columns, &cf, &ranked)?
        }
    };
    Ok(SelectionResult {
        method: SelectionMethod::Correlation,
        selected,
        scores: ranked,
        policy: *policy,
        bins: None,
        mode: Some(mode),
    })
}

/// Forward selection on subset merit. Starts from the best-correlated
/// feature and adds whichever candidate raises the merit most, stopping when
/// no candidate strictly improves it. Candidates whose merit is undefined
/// (nonpositive radicand) are skipped — a pathological subset is never
/// selected.
fn greedy_merit(
    columns: &[Vec<f64>],
    cf: &[f64],
    ranked: &[FeatureScore],
) -> Result<Vec<usize>, FeatureSelectionError> {
    let mut chosen: Vec<usize> = vec![ranked[0].feature_index];
    let mut chosen_cf: Vec<f64> = vec![cf[ranked[0].feature_index]];
    let mut ff_sum = 0.0; // sum of pairwise correlations inside `chosen`
    let mut best_merit = merit(&chosen_cf, 0.0)?;
    let mut pair_cache: BTreeMap<(usize, usize), f64> = BTreeMap::new();

    loop {
        let mut improvement: Option<(f64, usize, f64)> = None; // (merit, feature, ff_sum delta)
        for candidate in 0..columns.len() {
            if chosen.contains(&candidate) {
                continue;
            }
            let mut delta = 0.0;
            for &s in &chosen {
                let key = (s.min(candidate), s.max(candidate));
                let r = match pair_cache.get(&key) {
                    Some(&r) => r,
                    None => {
                        let r = pearson(&columns[key.0], &columns[key.1])?;
                        pair_cache.insert(key, r);
                        r
                    }
                };
                delta += r;
            }
            let k_new = chosen.len() + 1;
            let pairs_new = (k_new * (k_new - 1) / 2) as f64;
            let ff_mean = (ff_sum + delta) / pairs_new;
            let mut cf_new = chosen_cf.clone();
            cf_new.push(cf[candidate]);
            let m = match merit(&cf_new, ff_mean) {
                Ok(m) => m,
                Err(FeatureSelectionError::DegenerateMerit { .. }) => continue,
                Err(e) => return Err(e),
            };
            let better = match improvement {
                None => m > best_merit,
                Some((incumbent, _, _)) => m > incumbent,
            };
            if better {
                improvement = Some((m, candidate, delta));
            }
        }
        match improvement {
            Some((m, feature, delta)) => {
                chosen.push(feature);
                chosen_cf.push(cf[feature]);
                ff_sum += delta;
                best_merit = m;
            }
            None => break,
        }
    }

    // Order the subset like the ranking view: descending |correlation|.
    let mut ordered = chosen;
    ordered.sort_by(|&a, &b| cf[b].abs().total_cmp(&cf[a].abs()).then(a.cmp(&b)));
    Ok(ordered)
}

/// Restricts a dataset to the selected feature columns. The input's column
/// order is preserved (selecting everything is the identity), labels are
/// untouched.
pub fn project(d: &Dataset, sel: &SelectionResult) -> Result<Dataset, FeatureSelectionError> {
    if sel.selected.is_empty() {
        return Err(FeatureSelectionError::EmptySelection);
    }
    let mut indices = sel.selected.clone();
    indices.sort_unstable();
    if let Some(&bad) = indices.iter().find(|&&i| i >= d.n_features()) {
        return Err(FeatureSelectionError::OutOfRange { index: bad, n_features: d.n_features() });
    }
    Ok(Dataset {
        features: d
            .features
            .iter()
            .map(|row| indices.iter().map(|&i| row[i]).collect())
            .collect(),
        labels: d.labels.clone(),
        feature_names: indices.iter().map(|&i| d.feature_names[i].clone()).collect(),
    })
}

/// Emits the ranked score table as CSV (`feature_name,score,selected`),
/// descending by score — the data behind a feature-importance plot.
pub fn write_scores_csv(
    feature_names: &[String],
    sel: &SelectionResult,
    path: &Path,
) -> Result<(), FeatureSelectionError> {
    let mut writer = csv::Writer::from_path(path).map_err(|source| {
        FeatureSelectionError::Csv { path: path.display().to_string(), source }
    })?;
    let chosen: HashSet<usize> = sel.selected.iter().copied().collect();
    let csv_err =
        |source| FeatureSelectionError::Csv { path: path.display().to_string(), source };
    writer.write_record(["feature_name", "score", "selected"]).map_err(csv_err)?;
    for s in &sel.scores {
        writer
            .write_record([
                feature_names[s.feature_index].as_str(),
                &s.score.to_string(),
                if chosen.contains(&s.feature_index) { "true" } else { "false" },
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|source| FeatureSelectionError::Io {
        path: path.display().to_string(),
        source,
    })
}
