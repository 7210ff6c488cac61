//! Run configuration: a flat, line-oriented `key = value` format under
//! `[section]` headers.
//!
//! The format is deliberately dumb — no nesting, no quoting, no escapes — so
//! configs diff cleanly and a human can audit every effective knob. `#`
//! starts a comment anywhere on a line; blank lines are ignored; a repeated
//! key keeps its last value; an unknown section or key is an error rather
//! than a silent no-op. The literal value `none` clears an optional knob.
//!
//! [`PipelineConfig::canonical`] re-emits the *effective* configuration
//! (every knob, defaults filled in, CLI overrides applied) in a fixed order.
//! That string is what gets hashed into the run report, so two runs with the
//! same hash saw byte-identical effective settings, no matter how their
//! config files were formatted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::classifiers::Criterion;
use crate::data::{NonFinitePolicy, DEFAULT_BENIGN_LABELS};
use crate::feature_selection::{CorrelationMode, SelectionMethod, SelectionPolicy};
use crate::hyperopt::{OptimizerId, OptimizerSettings};
use crate::pipeline::PipelineError;

/// When and whether Z-score normalization runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizeMode {
    /// Fit on the full dataset before splitting (the default).
    #[default]
    Full,
    /// Fit on the training split only; the test split reuses those params.
    TrainOnly,
    /// Leave features as loaded.
    None,
}

impl NormalizeMode {
    pub fn id(self) -> &'static str {
        match self {
            NormalizeMode::Full => "full",
            NormalizeMode::TrainOnly => "train-only",
            NormalizeMode::None => "none",
        }
    }
}

impl FromStr for NormalizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(NormalizeMode::Full),
            "train-only" => Ok(NormalizeMode::TrainOnly),
            "none" => Ok(NormalizeMode::None),
            other => Err(format!("unknown normalize mode {other:?} (full, train-only, none)")),
        }
    }
}

/// Which classifier family the pipeline trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassifierKind {
    #[default]
    RandomForest,
    Knn,
}

impl ClassifierKind {
    pub fn id(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "rf",
            ClassifierKind::Knn => "knn",
        }
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rf" => Ok(ClassifierKind::RandomForest),
            "knn" => Ok(ClassifierKind::Knn),
            other => Err(format!("unknown classifier {other:?} (rf, knn)")),
        }
    }
}

/// Whether feature selection sees the training split before or after
/// oversampling. Post-oversampling is the default; the pre variant exists
/// for ablation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionStage {
    #[default]
    PostSmote,
    PreSmote,
}

impl SelectionStage {
    pub fn id(self) -> &'static str {
        match self {
            SelectionStage::PostSmote => "post-smote",
            SelectionStage::PreSmote => "pre-smote",
        }
    }
}

impl FromStr for SelectionStage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "post-smote" => Ok(SelectionStage::PostSmote),
            "pre-smote" => Ok(SelectionStage::PreSmote),
            other => Err(format!("unknown selection stage {other:?} (post-smote, pre-smote)")),
        }
    }
}

/// `[data]`: where the flows come from and how raw cells become features.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub path: PathBuf,
    pub label_column: String,
    pub delimiter: u8,
    pub benign_labels: Vec<String>,
    pub attack_labels: Vec<String>,
    pub label_map: Option<PathBuf>,
    pub non_finite: NonFinitePolicy,
    pub normalize: NormalizeMode,
}

/// `[split]`: train/test partitioning.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSection {
    pub train_fraction: f64,
    pub stratified: bool,
}

/// `[smote]`: minority oversampling. The target minority count is
/// `target_count` when given, otherwise `round(ratio · majority)`; a target
/// at or below the current count leaves the split untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteSection {
    pub enabled: bool,
    pub k: usize,
    pub ratio: f64,
    pub target_count: Option<usize>,
}

/// `[features]`: scoring method and cut policy. `method = none` disables the
/// stage. Both cut knobs are always carried so switching `policy` back and
/// forth does not lose the other knob's value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturesSection {
    pub method: Option<SelectionMethod>,
    pub bins: usize,
    pub cbfs_mode: CorrelationMode,
    pub policy: PolicyKind,
    pub top_k: usize,
    pub threshold: f64,
    pub when: SelectionStage,
}

/// Which cut rule `[features] policy` names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyKind {
    TopK,
    #[default]
    RelativeThreshold,
}

impl PolicyKind {
    pub fn id(self) -> &'static str {
        match self {
            PolicyKind::TopK => "top-k",
            PolicyKind::RelativeThreshold => "relative-threshold",
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "top-k" => Ok(PolicyKind::TopK),
            "relative-threshold" => Ok(PolicyKind::RelativeThreshold),
            other => {
                Err(format!("unknown policy {other:?} (top-k, relative-threshold)"))
            }
        }
    }
}

impl FeaturesSection {
    /// The concrete cut rule the active `policy` + knobs describe.
    pub fn selection_policy(&self) -> SelectionPolicy {
        match self.policy {
            PolicyKind::TopK => SelectionPolicy::TopK(self.top_k),
            PolicyKind::RelativeThreshold => SelectionPolicy::RelativeThreshold(self.threshold),
        }
    }
}

/// `[model]`: the classifier trained by `evaluate` and `learning-curve`,
/// and the family whose search space `optimize`/`run` explore. Both family
/// knobs are always carried, like the selection-policy knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub classifier: ClassifierKind,
    pub k: usize,
    pub trees: usize,
    pub criterion: Criterion,
}

impl ModelSection {
    /// The fixed hyper-parameters this section pins down.
    pub fn hyperparams(&self) -> crate::classifiers::HyperParams {
        match self.classifier {
            ClassifierKind::Knn => crate::classifiers::HyperParams::Knn { k: self.k },
            ClassifierKind::RandomForest => crate::classifiers::HyperParams::RandomForest {
                trees: self.trees,
                criterion: self.criterion,
            },
        }
    }
}

/// `[optimize]`: search strategy and budget. The per-optimizer knobs are
/// optional; an absent knob keeps that optimizer's default.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSection {
    pub optimizer: OptimizerId,
    pub budget: usize,
    pub folds: usize,
    pub settings: OptimizerSettings,
}

/// `[curve]`: learning-curve sampling plan and the plateau tolerance used
/// for the minimum-training-size readout.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSection {
    pub fractions: Vec<f64>,
    pub folds: usize,
    pub epsilon: f64,
}

/// `[run]`: master seed and artifact directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Every knob of a pipeline run, defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub data: DataSection,
    pub split: SplitSection,
    pub smote: SmoteSection,
    pub features: FeaturesSection,
    pub model: ModelSection,
    pub optimize: OptimizeSection,
    pub curve: CurveSection,
    pub run: RunSection,
}

impl PipelineConfig {
    /// Parses a config file.
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        PipelineConfig::parse(&text)
    }

    /// Parses config text. Unknown sections or keys, malformed values, and
    /// out-of-range settings are all errors.
    pub fn parse(text: &str) -> Result<PipelineConfig, PipelineError> {
        let raw = RawConfig::parse(text)?;
        let cfg = PipelineConfig::from_raw(&raw)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies the command-line overrides that outrank the file.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out_dir: Option<&Path>) {
        if let Some(seed) = seed {
            self.run.seed = seed;
        }
        if let Some(dir) = out_dir {
            self.run.out_dir = dir.to_path_buf();
        }
    }

    /// Re-emits the effective configuration: every knob, fixed order,
    /// defaults filled in. Parsing the result reproduces `self` exactly.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let path = |p: &PathBuf| p.display().to_string();
        let opt_path =
            |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        let list = |v: &[String]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.join(",")
            }
        };
        let floats =
            |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let opt_usize = |v: &Option<usize>| v.map_or("none".to_string(), |v| v.to_string());
        let opt_f64 = |v: &Option<f64>| v.map_or("none".to_string(), |v| v.to_string());

        let _ = writeln!(s, "[data]");
        let _ = writeln!(s, "path = {}", path(&self.data.path));
        let _ = writeln!(s, "label_column = {}", self.data.label_column);
        let _ = writeln!(s, "delimiter = {}", self.data.delimiter as char);
        let _ = writeln!(s, "benign_labels = {}", list(&self.data.benign_labels));
        let _ = writeln!(s, "attack_labels = {}", list(&self.data.attack_labels));
        let _ = writeln!(s, "label_map = {}", opt_path(&self.data.label_map));
        let non_finite = match self.data.non_finite {
            NonFinitePolicy::Error => "error",
            NonFinitePolicy::DropRow => "drop-row",
        };
        let _ = writeln!(s, "non_finite = {non_finite}");
        let _ = writeln!(s, "normalize = {}", self.data.normalize.id());

        let _ = writeln!(s, "[split]");
        let _ = writeln!(s, "train_fraction = {}", self.split.train_fraction);
        let _ = writeln!(s, "stratified = {}", self.split.stratified);

        let _ = writeln!(s, "[smote]");
        let _ = writeln!(s, "enabled = {}", self.smote.enabled);
        let _ = writeln!(s, "k = {}", self.smote.k);
        let _ = writeln!(s, "ratio = {}", self.smote.ratio);
        let _ = writeln!(s, "target_count = {}", opt_usize(&self.smote.target_count));

        let _ = writeln!(s, "[features]");
        let method = self.features.method.map_or("none", SelectionMethod::id);
        let _ = writeln!(s, "method = {method}");
        let _ = writeln!(s, "bins = {}", self.features.bins);
        let cbfs_mode = match self.features.cbfs_mode {
            CorrelationMode::Ranking => "ranking",
            CorrelationMode::GreedyMerit => "greedy-merit",
        };
        let _ = writeln!(s, "cbfs_mode = {cbfs_mode}");
        let _ = writeln!(s, "policy = {}", self.features.policy.id());
        let _ = writeln!(s, "top_k = {}", self.features.top_k);
        let _ = writeln!(s, "threshold = {}", self.features.threshold);
        let _ = writeln!(s, "when = {}", self.features.when.id());

        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "classifier = {}", self.model.classifier.id());
        let _ = writeln!(s, "k = {}", self.model.k);
        let _ = writeln!(s, "trees = {}", self.model.trees);
        let _ = writeln!(s, "criterion = {}", self.model.criterion.id());

        let _ = writeln!(s, "[optimize]");
        let _ = writeln!(s, "optimizer = {}", self.optimize.optimizer.id());
        let _ = writeln!(s, "budget = {}", self.optimize.budget);
        let _ = writeln!(s, "folds = {}", self.optimize.folds);
        let st = &self.optimize.settings;
        let _ = writeln!(s, "swarm_size = {}", opt_usize(&st.swarm_size));
        let _ = writeln!(s, "iterations = {}", opt_usize(&st.iterations));
        let _ = writeln!(s, "population = {}", opt_usize(&st.population));
        let _ = writeln!(s, "generations = {}", opt_usize(&st.generations));
        let _ = writeln!(s, "stall_generations = {}", opt_usize(&st.stall_generations));
        let _ = writeln!(s, "crossover_rate = {}", opt_f64(&st.crossover_rate));
        let _ = writeln!(s, "mutation_rate = {}", opt_f64(&st.mutation_rate));

        let _ = writeln!(s, "[curve]");
        let _ = writeln!(s, "fractions = {}", floats(&self.curve.fractions));
        let _ = writeln!(s, "folds = {}", self.curve.folds);
        let _ = writeln!(s, "epsilon = {}", self.curve.epsilon);

        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "seed = {}", self.run.seed);
        let _ = writeln!(s, "out_dir = {}", path(&self.run.out_dir));
        s
    }

    /// SHA-256 of the canonical emission, as lowercase hex. Stamped into
    /// reports so a result can be traced back to its exact settings.
    ///
    /// `run.out_dir` is left out of the digest: it decides where artifacts
    /// land, not what gets computed, so two runs that differ only in output
    /// location share a hash.
    pub fn hash(&self) -> String {
        let hashed: String = self
            .canonical()
            .lines()
            .filter(|line| !line.starts_with("out_dir = "))
            .map(|line| format!("{line}\n"))
            .collect();
        let digest = Sha256::digest(hashed.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn from_raw(raw: &RawConfig) -> Result<PipelineConfig, PipelineError> {
        let path = raw
            .optional("data", "path")?
            .map(PathBuf::from)
            .ok_or_else(|| PipelineError::Config("data.path is required".into()))?;
        let label_column =
            raw.optional("data", "label_column")?.unwrap_or_else(|| "label".to_string());
        let delimiter = match raw.literal("data", "delimiter") {
            None => b',',
            Some(v) if v.len() == 1 && v.is_ascii() => v.as_bytes()[0],
            Some(v) => {
                return Err(PipelineError::Config(format!(
                    "data.delimiter must be a single ASCII character; got {v:?}"
                )))
            }
        };
        let benign_labels = raw.string_list("data", "benign_labels")?.unwrap_or_else(|| {
            DEFAULT_BENIGN_LABELS.iter().map(|s| s.to_string()).collect()
        });
        let attack_labels = raw.string_list("data", "attack_labels")?.unwrap_or_default();
        let label_map = raw.optional("data", "label_map")?.map(PathBuf::from);
        let non_finite = match raw.literal("data", "non_finite") {
            None | Some("error") => NonFinitePolicy::Error,
            Some("drop-row") => NonFinitePolicy::DropRow,
            Some(other) => {
                return Err(PipelineError::Config(format!(
                    "unknown data.non_finite {other:?} (error, drop-row)"
                )))
            }
        };
        // `none` is a real mode here, not a reset to the default.
        let normalize = match raw.literal("data", "normalize") {
            None => NormalizeMode::Full,
            Some(v) => v.parse::<NormalizeMode>().map_err(|e| {
                PipelineError::Config(format!("bad value for data.normalize: {e}"))
            })?,
        };

        let split = SplitSection {
            train_fraction: raw.parsed("split", "train_fraction")?.unwrap_or(0.7),
            stratified: raw.parsed("split", "stratified")?.unwrap_or(false),
        };

        let smote = SmoteSection {
            enabled: raw.parsed("smote", "enabled")?.unwrap_or(true),
            k: raw.parsed("smote", "k")?.unwrap_or(crate::smote::SmoteConfig::DEFAULT_K),
            ratio: raw.parsed("smote", "ratio")?.unwrap_or(1.0),
            target_count: raw.parsed_opt("smote", "target_count")?,
        };

        // `none` disables the stage; it is not a reset to the default.
        let method = match raw.literal("features", "method") {
            None | Some("igbfs") => Some(SelectionMethod::InfoGain),
            Some("cbfs") => Some(SelectionMethod::Correlation),
            Some("none") => None,
            Some(other) => {
                return Err(PipelineError::Config(format!(
                    "unknown features.method {other:?} (igbfs, cbfs, none)"
                )))
            }
        };
        let cbfs_mode = match raw.literal("features", "cbfs_mode") {
            None | Some("ranking") => CorrelationMode::Ranking,
            Some("greedy-merit") => CorrelationMode::GreedyMerit,
            Some(other) => {
                return Err(PipelineError::Config(format!(
                    "unknown features.cbfs_mode {other:?} (ranking, greedy-merit)"
                )))
            }
        };
        let features = FeaturesSection {
            method,
            bins: raw.parsed("features", "bins")?.unwrap_or(10),
            cbfs_mode,
            policy: raw.parsed("features", "policy")?.unwrap_or_default(),
            top_k: raw.parsed("features", "top_k")?.unwrap_or(10),
            threshold: raw.parsed("features", "threshold")?.unwrap_or(0.01),
            when: raw.parsed("features", "when")?.unwrap_or_default(),
        };

        let model = ModelSection {
            classifier: raw.parsed("model", "classifier")?.unwrap_or_default(),
            k: raw.parsed("model", "k")?.unwrap_or(5),
            trees: raw.parsed("model", "trees")?.unwrap_or(100),
            criterion: raw.parsed("model", "criterion")?.unwrap_or(Criterion::Gini),
        };

        let optimize = OptimizeSection {
            optimizer: raw.parsed("optimize", "optimizer")?.unwrap_or(OptimizerId::BayesTpe),
            budget: raw.parsed("optimize", "budget")?.unwrap_or(50),
            folds: raw.parsed("optimize", "folds")?.unwrap_or(3),
            settings: OptimizerSettings {
                swarm_size: raw.parsed_opt("optimize", "swarm_size")?,
                iterations: raw.parsed_opt("optimize", "iterations")?,
                population: raw.parsed_opt("optimize", "population")?,
                generations: raw.parsed_opt("optimize", "generations")?,
                stall_generations: raw.parsed_opt("optimize", "stall_generations")?,
                crossover_rate: raw.parsed_opt("optimize", "crossover_rate")?,
                mutation_rate: raw.parsed_opt("optimize", "mutation_rate")?,
            },
        };

        let curve = CurveSection {
            fractions: raw.f64_list("curve", "fractions")?.unwrap_or_else(|| {
                (1..=10).map(|i| i as f64 / 10.0).collect()
            }),
            folds: raw.parsed("curve", "folds")?.unwrap_or(5),
            epsilon: raw.parsed("curve", "epsilon")?.unwrap_or(0.002),
        };

        let run = RunSection {
            seed: raw.parsed("run", "seed")?.unwrap_or(42),
            out_dir: raw
                .optional("run", "out_dir")?
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out")),
        };

        Ok(PipelineConfig { data: DataSection {
            path,
            label_column,
            delimiter,
            benign_labels,
            attack_labels,
            label_map,
            non_finite,
            normalize,
        }, split, smote, features, model, optimize, curve, run })
    }

    fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad(format!("split.train_fraction must lie in (0, 1); got {f}"));
        }
        if self.smote.k == 0 {
            return bad("smote.k must be at least 1".into());
        }
        if !(self.smote.ratio > 0.0 && self.smote.ratio.is_finite()) {
            return bad(format!("smote.ratio must be positive; got {}", self.smote.ratio));
        }
        if self.features.bins < 2 {
            return bad(format!("features.bins must be at least 2; got {}", self.features.bins));
        }
        if self.features.top_k == 0 {
            return bad("features.top_k must be at least 1".into());
        }
        let t = self.features.threshold;
        if !(t > 0.0 && t <= 1.0) {
            return bad(format!("features.threshold must lie in (0, 1]; got {t}"));
        }
        if self.model.k == 0 {
            return bad("model.k must be at least 1".into());
        }
        if self.model.trees == 0 {
            return bad("model.trees must be at least 1".into());
        }
        if self.optimize.budget == 0 {
            return bad("optimize.budget must be at least 1".into());
        }
        if self.optimize.folds < 2 {
            return bad(format!("optimize.folds must be at least 2; got {}", self.optimize.folds));
        }
        for rate in [
            ("optimize.crossover_rate", self.optimize.settings.crossover_rate),
            ("optimize.mutation_rate", self.optimize.settings.mutation_rate),
        ] {
            if let (name, Some(r)) = rate {
                if !(0.0..=1.0).contains(&r) {
                    return bad(format!("{name} must lie in [0, 1]; got {r}"));
                }
            }
        }
        if self.curve.fractions.is_empty() {
            return bad("curve.fractions must list at least one fraction".into());
        }
        for &fr in &self.curve.fractions {
            if !(fr > 0.0 && fr <= 1.0) {
                return bad(format!("curve.fractions entries must lie in (0, 1]; got {fr}"));
            }
        }
        for pair in self.curve.fractions.windows(2) {
            if pair[1] <= pair[0] {
                return bad(format!(
                    "curve.fractions must strictly ascend; got {} then {}",
                    pair[0], pair[1]
                ));
            }
        }
        if self.curve.folds < 2 {
            return bad(format!("curve.folds must be at least 2; got {}", self.curve.folds));
        }
        if !(self.curve.epsilon > 0.0 && self.curve.epsilon.is_finite()) {
            return bad(format!("curve.epsilon must be positive; got {}", self.curve.epsilon));
        }
        Ok(())
    }
}

/// Known config keys per section; anything else is rejected by name.
const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "data",
        &[
            "path",
            "label_column",
            "delimiter",
            "benign_labels",
            "attack_labels",
            "label_map",
            "non_finite",
            "normalize",
        ],
    ),
    ("split", &["train_fraction", "stratified"]),
    ("smote", &["enabled", "k", "ratio", "target_count"]),
    (
        "features",
        &["method", "bins", "cbfs_mode", "policy", "top_k", "threshold", "when"],
    ),
    ("model", &["classifier", "k", "trees", "criterion"]),
    (
        "optimize",
        &[
            "optimizer",
            "budget",
            "folds",
            "swarm_size",
            "iterations",
            "population",
            "generations",
            "stall_generations",
            "crossover_rate",
            "mutation_rate",
        ],
    ),
    ("curve", &["fractions", "folds", "epsilon"]),
    ("run", &["seed", "out_dir"]),
];

/// The file reduced to `(section, key) → last value`, before typing.
struct RawConfig {
    values: BTreeMap<(String, String), String>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<RawConfig, PipelineError> {
        let mut values = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    PipelineError::Config(format!("line {line_no}: unterminated section header"))
                })?;
                let name = name.trim();
                if !KNOWN_KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(PipelineError::Config(format!(
                        "line {line_no}: unknown section [{name}]"
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(PipelineError::Config(format!(
                    "line {line_no}: expected `key = value` or `[section]`; got {line:?}"
                )));
            };
            let Some(section) = section.as_ref() else {
                return Err(PipelineError::Config(format!(
                    "line {line_no}: `{}` appears before any [section] header",
                    key.trim()
                )));
            };
            let key = key.trim().to_string();
            let known = KNOWN_KEYS
                .iter()
                .find(|(s, _)| s == section)
                .is_some_and(|(_, keys)| keys.contains(&key.as_str()));
            if !known {
                return Err(PipelineError::Config(format!(
                    "line {line_no}: unknown key `{key}` in section [{section}]"
                )));
            }
            // Last value wins, so a config can end with override lines.
            values.insert((section.clone(), key), value.trim().to_string());
        }
        Ok(RawConfig { values })
    }

    /// Raw value for a key where `none` (or an empty value) means "unset":
    /// the truly optional knobs. Scalar settings go through [`literal`] or
    /// [`parsed`] instead, so a bogus `none` there fails loudly.
    fn optional(&self, section: &str, key: &str) -> Result<Option<String>, PipelineError> {
        match self.values.get(&(section.to_string(), key.to_string())) {
            None => Ok(None),
            Some(v) if v.is_empty() || v == "none" => Ok(None),
            Some(v) => Ok(Some(v.clone())),
        }
    }

    /// Raw value with only absence meaning "unset" — for keys with a
    /// default, where every present value (including `none`) must be valid.
    fn literal(&self, section: &str, key: &str) -> Option<&str> {
        self.values.get(&(section.to_string(), key.to_string())).map(String::as_str)
    }

    /// `FromStr`-typed value with a default applied by the caller; a value
    /// the type cannot parse — `none` included — is an error.
    fn parsed<T>(&self, section: &str, key: &str) -> Result<Option<T>, PipelineError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.literal(section, key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                PipelineError::Config(format!("bad value for {section}.{key}: {e}"))
            }),
        }
    }

    /// `FromStr`-typed optional knob: `none` and empty read as unset.
    fn parsed_opt<T>(&self, section: &str, key: &str) -> Result<Option<T>, PipelineError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.optional(section, key)? {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                PipelineError::Config(format!("bad value for {section}.{key}: {e}"))
            }),
        }
    }

    /// Comma-separated strings; empty entries are dropped.
    fn string_list(&self, section: &str, key: &str) -> Result<Option<Vec<String>>, PipelineError> {
        // A present-but-`none` key must stay distinguishable from an absent
        // one: `attack_labels = none` means "empty list", not "default".
        match self.values.get(&(section.to_string(), key.to_string())) {
            None => Ok(None),
            Some(v) if v.is_empty() || v == "none" => Ok(Some(Vec::new())),
            Some(v) => Ok(Some(
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect(),
            )),
        }
    }

    /// Comma-separated floats.
    fn f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, PipelineError> {
        match self.string_list(section, key)? {
            None => Ok(None),
            Some(items) => items
                .iter()
                .map(|s| {
                    s.parse::<f64>().map_err(|e| {
                        PipelineError::Config(format!("bad value for {section}.{key}: {e}"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }
}
