//! Dataset ingestion, label binarization, normalization, and splitting.
//!
//! Flow exports arrive as headered CSV. [`load_csv`] parses the file and
//! infers per-column types, [`preprocess`] turns it into a numeric
//! [`Dataset`] with strictly binary labels, [`fit_zscore`]/[`apply_zscore`]
//! implement standard-score normalization, and [`split_train_test`] performs
//! the seeded train/test partition.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::rng::stream_rng;

/// Label spellings treated as the normal class when a config lists none.
/// Covers the common exports: capitalized/uppercase benign markers and the
/// numeric `0` used by datasets with pre-encoded labels.
pub const DEFAULT_BENIGN_LABELS: &[&str] =
    &["0", "BENIGN", "Benign", "benign", "NORMAL", "Normal", "normal"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv parse failure in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("data row {row} has {got} cells, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),
    #[error("duplicate column name {0:?} in header")]
    DuplicateColumn(String),
    #[error("{0}")]
    Empty(&'static str),
    #[error("data row {row}, column {column:?}: empty numeric cell (imputation is not supported)")]
    MissingNumeric { row: usize, column: String },
    #[error("data row {row}, column {column:?}: non-finite value {value:?}")]
    NonFinite { row: usize, column: String, value: String },
    #[error("data row {row}: label {label:?} matches neither the benign nor the attack list")]
    UnknownLabel { row: usize, label: String },
    #[error("label adapter {path}, line {line}: expected `benign = <label>` or `attack = <label>`")]
    AdapterParse { path: String, line: usize },
    #[error("normalization parameters cover {params} features, dataset has {data}")]
    DimensionMismatch { params: usize, data: usize },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("splitting {rows} rows at fraction {fraction} leaves an empty partition")]
    DegenerateSplit { rows: usize, fraction: f64 },
    #[error("need at least {need} rows, have {got}")]
    TooFewRows { need: usize, got: usize },
}

/// Whether every non-empty cell of a raw column parses as a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// A parsed CSV file before any cleanup: text cells plus per-column type
/// inference. Row and column order match the file.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub column_names: Vec<String>,
    pub column_kinds: Vec<ColumnKind>,
    pub label_index: usize,
    pub rows: Vec<Vec<String>>,
}

/// Encoded feature matrix with strictly binary labels (0 = normal,
/// 1 = attack). Stored row-major; every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Row counts per class as (normal, attack).
    pub fn class_counts(&self) -> (usize, usize) {
        let attack = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - attack, attack)
    }

    /// Copies the rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// One feature column as a contiguous vector.
    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.features.iter().map(|row| row[feature]).collect()
    }
}

/// Per-feature population mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationParams {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Seeded train/test split request. `stratified` keeps per-class proportions
/// (rounded per class); the default is a plain uniform partition.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        SplitSpec { train_fraction, seed, stratified: false }
    }
}

/// Maps raw label spellings onto the binary classes.
///
/// `benign` spellings become class 0. With an empty `attack` set every other
/// label becomes class 1 (open-world policy, the default); with a non-empty
/// set, a label outside both lists is an error (closed-world policy, useful
/// for catching typos in curated exports).
#[derive(Debug, Clone, Default)]
pub struct LabelPolicy {
    benign: BTreeSet<String>,
    attack: BTreeSet<String>,
}

impl LabelPolicy {
    /// Everything outside `benign` counts as an attack.
    pub fn open_world<I, S>(benign: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LabelPolicy {
            benign: benign.into_iter().map(Into::into).collect(),
            attack: BTreeSet::new(),
        }
    }

    /// Only the listed labels are accepted; anything else is an error.
    pub fn closed_world<I, J, S, T>(benign: I, attack: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        LabelPolicy {
            benign: benign.into_iter().map(Into::into).collect(),
            attack: attack.into_iter().map(Into::into).collect(),
        }
    }

    /// Reads an adapter file of `benign = <label>` / `attack = <label>`
    /// lines (`#` comments allowed) and merges it into `self`.
    pub fn merge_file(mut self, path: &Path) -> Result<Self, DataError> {
        let text = fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = || DataError::AdapterParse {
                path: path.display().to_string(),
                line: idx + 1,
            };
            let (key, value) = line.split_once('=').ok_or_else(parse_err)?;
            let value = value.trim().to_string();
            match key.trim() {
                "benign" => {
                    self.benign.insert(value);
                }
                "attack" => {
                    self.attack.insert(value);
                }
                _ => return Err(parse_err()),
            }
        }
        Ok(self)
    }

    /// Binary class for a raw label, or `None` when the label is unknown
    /// under a closed-world policy.
    fn classify(&self, label: &str) -> Option<u8> {
        if self.benign.contains(label) {
            Some(0)
        } else if self.attack.is_empty() || self.attack.contains(label) {
            Some(1)
        } else {
            None
        }
    }
}

/// How to treat numeric cells that are empty or parse to NaN/±infinity.
/// `DropRow` exists for real-world exports that contain a handful of
/// division-overflow artifacts; `Error` (the default) refuses them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NonFinitePolicy {
    #[default]
    Error,
    DropRow,
}

/// Parses a headered CSV file. Cell types are inferred per column: a column
/// is numeric when every non-empty cell parses as a number, categorical
/// otherwise. Header names are trimmed of surrounding whitespace.
pub fn load_csv(path: &Path, label_column: &str, delimiter: u8) -> Result<RawTable, DataError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(delimiter)
        .flexible(true)
        .from_path(path)
        .map_err(|source| match source.kind() {
            csv::ErrorKind::Io(_) => DataError::Io {
                path: display.clone(),
                source: match source.into_kind() {
                    csv::ErrorKind::Io(e) => e,
                    _ => unreachable!(),
                },
            },
            _ => DataError::Csv { path: display.clone(), source },
        })?;

    let headers = reader
        .headers()
        .map_err(|source| DataError::Csv { path: display.clone(), source })?;
    let column_names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = BTreeSet::new();
    for name in &column_names {
        if !seen.insert(name.clone()) {
            return Err(DataError::DuplicateColumn(name.clone()));
        }
    }
    let label_index = column_names
        .iter()
        .position(|n| n == label_column)
        .ok_or_else(|| DataError::MissingLabelColumn(label_column.to_string()))?;

    let expected = column_names.len();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|source| DataError::Csv { path: display.clone(), source })?;
        if record.len() != expected {
            return Err(DataError::RaggedRow { row: idx + 1, got: record.len(), expected });
        }
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(DataError::Empty("csv contains a header but no data rows"));
    }

    // A column is numeric when every non-empty cell parses as f64 ("NaN" and
    // "Infinity" parse too; the preprocessing policy decides their fate).
    let column_kinds = (0..expected)
        .map(|col| {
            let numeric = rows
                .iter()
                .all(|row| row[col].is_empty() || row[col].parse::<f64>().is_ok());
            if numeric { ColumnKind::Numeric } else { ColumnKind::Categorical }
        })
        .collect();

    Ok(RawTable { column_names, column_kinds, label_index, rows })
}

/// Cleans a raw table into a numeric dataset:
///
/// * rows with an empty label cell are discarded;
/// * labels are binarized through `labels` (normal = 0, attack = 1);
/// * categorical feature columns are label-encoded by lexicographic order of
///   their distinct values (computed over surviving rows);
/// * empty or non-finite numeric cells follow `non_finite` — a hard error by
///   default, or dropping the offending row.
pub fn preprocess(
    raw: &RawTable,
    labels: &LabelPolicy,
    non_finite: NonFinitePolicy,
) -> Result<Dataset, DataError> {
    if raw.rows.is_empty() {
        return Err(DataError::Empty("raw table has no rows"));
    }
    let feature_cols: Vec<usize> =
        (0..raw.column_names.len()).filter(|&c| c != raw.label_index).collect();
    if feature_cols.is_empty() {
        return Err(DataError::Empty("raw table has no feature columns"));
    }

    // Pass 1: decide which rows survive and what their class is.
    let mut survivors: Vec<(usize, u8)> = Vec::with_capacity(raw.rows.len());
    'rows: for (idx, row) in raw.rows.iter().enumerate() {
        let row_no = idx + 1;
        let label_cell = row[raw.label_index].as_str();
        if label_cell.is_empty() {
            continue; // unlabeled rows are discarded
        }
        let class = labels.classify(label_cell).ok_or_else(|| DataError::UnknownLabel {
            row: row_no,
            label: label_cell.to_string(),
        })?;
        for &col in &feature_cols {
            if raw.column_kinds[col] != ColumnKind::Numeric {
                continue;
            }
            let cell = row[col].as_str();
            let bad = if cell.is_empty() {
                true
            } else {
                // Parse cannot fail on a numeric column; treat NaN/inf as bad.
                !cell.parse::<f64>().map(f64::is_finite).unwrap_or(false)
            };
            if bad {
                match non_finite {
                    NonFinitePolicy::DropRow => continue 'rows,
                    NonFinitePolicy::Error if cell.is_empty() => {
                        return Err(DataError::MissingNumeric {
                            row: row_no,
                            column: raw.column_names[col].clone(),
                        });
                    }
                    NonFinitePolicy::Error => {
                        return Err(DataError::NonFinite {
                            row: row_no,
                            column: raw.column_names[col].clone(),
                            value: cell.to_string(),
                        });
                    }
                }
            }
        }
        survivors.push((idx, class));
    }
    if survivors.is_empty() {
        return Err(DataError::Empty("no labeled rows remain after cleanup"));
    }

    // Pass 2: build the lexicographic code maps for categorical columns.
    let mut code_maps: BTreeMap<usize, BTreeMap<String, f64>> = BTreeMap::new();
    for &col in &feature_cols {
        if raw.column_kinds[col] == ColumnKind::Categorical {
            let distinct: BTreeSet<&str> =
                survivors.iter().map(|&(r, _)| raw.rows[r][col].as_str()).collect();
            let map = distinct
                .into_iter()
                .enumerate()
                .map(|(code, value)| (value.to_string(), code as f64))
                .collect();
            code_maps.insert(col, map);
        }
    }

    // Pass 3: materialize the matrix.
    let mut features = Vec::with_capacity(survivors.len());
    let mut out_labels = Vec::with_capacity(survivors.len());
    for &(r, class) in &survivors {
        let mut row = Vec::with_capacity(feature_cols.len());
        for &col in &feature_cols {
            let cell = raw.rows[r][col].as_str();
            let value = match raw.column_kinds[col] {
                ColumnKind::Numeric => cell.parse::<f64>().expect("checked in pass 1"),
                ColumnKind::Categorical => code_maps[&col][cell],
            };
            row.push(value);
        }
        features.push(row);
        out_labels.push(class);
    }

    Ok(Dataset {
        features,
        labels: out_labels,
        feature_names: feature_cols.iter().map(|&c| raw.column_names[c].clone()).collect(),
    })
}

/// Computes per-feature population mean and population standard deviation.
/// A column whose minimum equals its maximum gets sigma exactly 0, with no
/// floating-point noise.
pub fn fit_zscore(d: &Dataset) -> Result<NormalizationParams, DataError> {
    if d.is_empty() {
        return Err(DataError::Empty("cannot fit normalization on an empty dataset"));
    }
    let m = d.len() as f64;
    let n = d.n_features();
    let mut mu = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    for j in 0..n {
        let mut sum = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &d.features {
            sum += row[j];
            lo = lo.min(row[j]);
            hi = hi.max(row[j]);
        }
        let mean = sum / m;
        mu[j] = mean;
        sigma[j] = if lo == hi {
            0.0
        } else {
            (d.features.iter().map(|row| (row[j] - mean).powi(2)).sum::<f64>() / m).sqrt()
        };
    }
    Ok(NormalizationParams { mu, sigma })
}

/// Maps every cell to `(x − mu) / sigma`. Zero-sigma features normalize to 0
/// everywhere — a constant column carries no information either way.
pub fn apply_zscore(d: &Dataset, p: &NormalizationParams) -> Result<Dataset, DataError> {
    if p.mu.len() != d.n_features() || p.sigma.len() != d.n_features() {
        return Err(DataError::DimensionMismatch { params: p.mu.len(), data: d.n_features() });
    }
    let features = d
        .features
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &x)| if p.sigma[j] == 0.0 { 0.0 } else { (x - p.mu[j]) / p.sigma[j] })
                .collect()
        })
        .collect();
    Ok(Dataset { features, labels: d.labels.clone(), feature_names: d.feature_names.clone() })
}

/// Seeded uniform partition into train and test. The train side gets
/// `round(train_fraction · rows)` rows; both sides must end up non-empty.
/// Stratified mode rounds the fraction per class instead.
pub fn split_train_test(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), DataError> {
    if d.len() < 2 {
        return Err(DataError::TooFewRows { need: 2, got: d.len() });
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DataError::BadFraction(spec.train_fraction));
    }

    let (train_idx, test_idx) = if spec.stratified {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for class in [0u8, 1u8] {
            let mut members: Vec<usize> =
                (0..d.len()).filter(|&i| d.labels[i] == class).collect();
            if members.is_empty() {
                continue;
            }
            members.shuffle(&mut stream_rng(spec.seed, class as u64));
            let take = (spec.train_fraction * members.len() as f64).round() as usize;
            train.extend_from_slice(&members[..take]);
            test.extend_from_slice(&members[take..]);
        }
        (train, test)
    } else {
        let mut indices: Vec<usize> = (0..d.len()).collect();
        indices.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
        let n_train = (spec.train_fraction * d.len() as f64).round() as usize;
        let test = indices.split_off(n_train.min(indices.len()));
        (indices, test)
    };

    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(DataError::DegenerateSplit { rows: d.len(), fraction: spec.train_fraction });
    }
    Ok((d.subset(&train_idx), d.subset(&test_idx)))
}

/// Writes a dataset back out as CSV: feature columns under their names plus a
/// final `label` column. Floats use the shortest representation that parses
/// back to the identical value.
pub fn write_csv(d: &Dataset, path: &Path) -> Result<(), DataError> {
    let io_err = |source| DataError::Io { path: path.display().to_string(), source };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    let mut write = |line: &str| out.write_all(line.as_bytes()).map_err(io_err);
    let mut header = d.feature_names.join(",");
    header.push_str(",label\n");
    write(&header)?;
    for (row, label) in d.features.iter().zip(&d.labels) {
        let mut line = String::new();
        for v in row {
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push_str(&label.to_string());
        line.push('\n');
        write(&line)?;
    }
    out.flush().map_err(io_err)
}
