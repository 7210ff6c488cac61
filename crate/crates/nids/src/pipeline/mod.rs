//! Configuration-driven orchestration of the full training pipeline.
//!
//! A run is a fixed sequence of stages — ingest → preprocess → normalize →
//! split → oversample(train) → select(train) → optimize → fit → evaluate —
//! where every stochastic stage draws its own seed stream from the single
//! master seed, so the entire run is a pure function of (config, seed) up to
//! wall-clock fields. Oversampling and feature selection only ever see the
//! training split; the test rows influence nothing until the final
//! evaluation.
//!
//! Each public function here backs one CLI subcommand. They all take the
//! parsed [`config::PipelineConfig`], write their artifacts into the
//! configured output directory, and return the structured result for the
//! caller to summarize.

pub mod config;
pub mod report;

use std::time::Instant;

use thiserror::Error;

use crate::classifiers::Model;
use crate::data::{self, Dataset, SplitSpec};
use crate::eval::{self, LearningCurve, Pca2};
use crate::feature_selection::{self, DiscretizationSpec, SelectionMethod, SelectionResult};
use crate::hyperopt::{
    candidate_to_hyperparams, cv_objective, knn_space, rf_space, run_search, OptimizationTrace,
    SearchSpace,
};
use crate::rng::derive_seed;
use crate::smote::{oversample, SmoteConfig};

use config::{ClassifierKind, NormalizeMode, PipelineConfig, SelectionStage};
use report::{
    emit_report, DataSummary, FeatureSummary, OptimizeSummary, ReportBundle, RunReport,
    SmoteSummary, StageTiming, TestSummary, REPORT_VERSION,
};

/// Cleaned-dataset artifact written by the `preprocess` subcommand.
pub const PREPROCESSED_FILE: &str = "preprocessed.csv";

// Per-stage seed streams, all derived from the master seed. The numbers are
// arbitrary but frozen: renumbering them changes every seeded artifact.
const STREAM_SPLIT: u64 = 1;
const STREAM_SMOTE: u64 = 2;
const STREAM_CV: u64 = 3;
const STREAM_OPT: u64 = 4;
const STREAM_FIT: u64 = 5;
const STREAM_CURVE: u64 = 6;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// The configuration (file or CLI flags) is unusable. Maps to exit 1.
    #[error("config error: {0}")]
    Config(String),
    /// A pipeline stage failed on real data. Maps to exit 2.
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
    /// An artifact could not be written. Maps to exit 2.
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Wraps a stage's error with the stage name, for `stage <name>: <cause>`
/// messages and exit-code mapping.
fn stage_err<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

/// Collects per-stage wall-clock entries in execution order, rounded to
/// millisecond resolution so reports stay byte-comparable after re-parsing.
struct StageClock {
    entries: Vec<StageTiming>,
}

impl StageClock {
    fn new() -> StageClock {
        StageClock { entries: Vec::new() }
    }

    fn record(&mut self, stage: &str, started: Instant) {
        let seconds = (started.elapsed().as_secs_f64() * 1000.0).round() / 1000.0;
        self.entries.push(StageTiming { stage: stage.to_string(), seconds: Some(seconds) });
    }

    fn disabled(&mut self, stage: &str) {
        self.entries.push(StageTiming { stage: stage.to_string(), seconds: None });
    }
}

/// The training inputs after every data-shaping stage has run.
struct Prepared {
    train: Dataset,
    test: Dataset,
    selection: Option<SelectionResult>,
    /// Feature names before selection, indexed by the score table.
    full_names: Vec<String>,
    data: DataSummary,
    features: FeatureSummary,
}

/// Builds the label policy from the config's lists plus the optional
/// adapter file.
fn label_policy(cfg: &PipelineConfig) -> Result<data::LabelPolicy, PipelineError> {
    let policy = if cfg.data.attack_labels.is_empty() {
        data::LabelPolicy::open_world(cfg.data.benign_labels.iter().cloned())
    } else {
        data::LabelPolicy::closed_world(
            cfg.data.benign_labels.iter().cloned(),
            cfg.data.attack_labels.iter().cloned(),
        )
    };
    match &cfg.data.label_map {
        Some(path) => policy.merge_file(path).map_err(stage_err("preprocess")),
        None => Ok(policy),
    }
}

/// Ingest → preprocess → optional full-dataset normalization. The shared
/// front half of every subcommand.
fn load_prepared_dataset(
    cfg: &PipelineConfig,
    clock: &mut StageClock,
) -> Result<Dataset, PipelineError> {
    let t = Instant::now();
    let raw = data::load_csv(&cfg.data.path, &cfg.data.label_column, cfg.data.delimiter)
        .map_err(stage_err("ingest"))?;
    clock.record("ingest", t);

    let policy = label_policy(cfg)?;
    let t = Instant::now();
    let dataset =
        data::preprocess(&raw, &policy, cfg.data.non_finite).map_err(stage_err("preprocess"))?;
    clock.record("preprocess", t);

    match cfg.data.normalize {
        NormalizeMode::Full => {
            let t = Instant::now();
            let params = data::fit_zscore(&dataset).map_err(stage_err("normalize"))?;
            let normalized =
                data::apply_zscore(&dataset, &params).map_err(stage_err("normalize"))?;
            clock.record("normalize", t);
            Ok(normalized)
        }
        NormalizeMode::TrainOnly => Ok(dataset), // deferred until after the split
        NormalizeMode::None => {
            clock.disabled("normalize");
            Ok(dataset)
        }
    }
}

/// Oversamples the training minority class in place. Returns the post-stage
/// counts when rows were actually added.
fn smote_stage(
    cfg: &PipelineConfig,
    master_seed: u64,
    clock: &mut StageClock,
    train: &mut Dataset,
) -> Result<Option<SmoteSummary>, PipelineError> {
    if !cfg.smote.enabled {
        clock.disabled("smote");
        return Ok(None);
    }
    let t = Instant::now();
    let (n0, n1) = train.class_counts();
    let (majority, minority) = (n0.max(n1), n0.min(n1));
    let target = cfg
        .smote
        .target_count
        .unwrap_or_else(|| (cfg.smote.ratio * majority as f64).round() as usize);
    if target <= minority {
        // Enabled but nothing to add — the split is already balanced enough.
        clock.record("smote", t);
        return Ok(None);
    }
    let smote_cfg = SmoteConfig {
        k: cfg.smote.k,
        target_minority_count: target,
        seed: derive_seed(master_seed, STREAM_SMOTE),
    };
    *train = oversample(train, &smote_cfg).map_err(stage_err("smote"))?;
    clock.record("smote", t);
    let (n0, n1) = train.class_counts();
    Ok(Some(SmoteSummary { train_rows: train.len(), train_normal: n0, train_attack: n1 }))
}

/// Scores features on the training split and projects both splits onto the
/// kept subset.
fn select_stage(
    cfg: &PipelineConfig,
    clock: &mut StageClock,
    train: &mut Dataset,
    test: &mut Dataset,
) -> Result<Option<SelectionResult>, PipelineError> {
    let Some(method) = cfg.features.method else {
        clock.disabled("select");
        return Ok(None);
    };
    let t = Instant::now();
    let sel = run_selection(method, cfg, train).map_err(stage_err("select"))?;
    *train = feature_selection::project(train, &sel).map_err(stage_err("select"))?;
    *test = feature_selection::project(test, &sel).map_err(stage_err("select"))?;
    clock.record("select", t);
    Ok(Some(sel))
}

fn run_selection(
    method: SelectionMethod,
    cfg: &PipelineConfig,
    d: &Dataset,
) -> Result<SelectionResult, feature_selection::FeatureSelectionError> {
    let policy = cfg.features.selection_policy();
    match method {
        SelectionMethod::InfoGain => {
            let disc = DiscretizationSpec { bins: cfg.features.bins };
            feature_selection::select_igbfs(d, &disc, &policy)
        }
        SelectionMethod::Correlation => {
            feature_selection::select_cbfs(d, cfg.features.cbfs_mode, &policy)
        }
    }
}

/// Everything from ingest through feature projection: the data a model
/// trains and is judged on.
fn prepare(cfg: &PipelineConfig, clock: &mut StageClock) -> Result<Prepared, PipelineError> {
    let master_seed = cfg.run.seed;
    let dataset = load_prepared_dataset(cfg, clock)?;
    let rows = dataset.len();
    let n_features = dataset.n_features();
    let full_names = dataset.feature_names.clone();

    let t = Instant::now();
    let spec = SplitSpec {
        train_fraction: cfg.split.train_fraction,
        seed: derive_seed(master_seed, STREAM_SPLIT),
        stratified: cfg.split.stratified,
    };
    let (mut train, mut test) =
        data::split_train_test(&dataset, &spec).map_err(stage_err("split"))?;
    clock.record("split", t);
    drop(dataset);

    if cfg.data.normalize == NormalizeMode::TrainOnly {
        let t = Instant::now();
        let params = data::fit_zscore(&train).map_err(stage_err("normalize"))?;
        train = data::apply_zscore(&train, &params).map_err(stage_err("normalize"))?;
        test = data::apply_zscore(&test, &params).map_err(stage_err("normalize"))?;
        clock.record("normalize", t);
    }

    let (train_normal, train_attack) = train.class_counts();
    let (train_rows, test_rows) = (train.len(), test.len());

    // Stage 1 (rebalance) and stage 2 (select) run in the configured order;
    // selecting first is the ablation variant.
    let (smote, selection) = match cfg.features.when {
        SelectionStage::PostSmote => {
            let smote = smote_stage(cfg, master_seed, clock, &mut train)?;
            let selection = select_stage(cfg, clock, &mut train, &mut test)?;
            (smote, selection)
        }
        SelectionStage::PreSmote => {
            let selection = select_stage(cfg, clock, &mut train, &mut test)?;
            let smote = smote_stage(cfg, master_seed, clock, &mut train)?;
            (smote, selection)
        }
    };

    let features = feature_summary(&selection, &full_names, n_features);
    let data = DataSummary {
        rows,
        features: n_features,
        train_rows,
        test_rows,
        train_normal,
        train_attack,
        smote,
    };
    Ok(Prepared { train, test, selection, full_names, data, features })
}

fn feature_summary(
    selection: &Option<SelectionResult>,
    full_names: &[String],
    n_features: usize,
) -> FeatureSummary {
    match selection {
        None => FeatureSummary {
            method: "none".to_string(),
            policy: None,
            bins: None,
            mode: None,
            kept: n_features,
            names: Vec::new(),
            scores: Vec::new(),
        },
        Some(sel) => {
            let score_of: std::collections::HashMap<usize, f64> =
                sel.scores.iter().map(|s| (s.feature_index, s.score)).collect();
            FeatureSummary {
                method: sel.method.id().to_string(),
                policy: Some(sel.policy.describe()),
                bins: sel.bins,
                mode: sel.mode.map(|m| {
                    match m {
                        feature_selection::CorrelationMode::Ranking => "ranking",
                        feature_selection::CorrelationMode::GreedyMerit => "greedy-merit",
                    }
                    .to_string()
                }),
                kept: sel.selected.len(),
                names: sel.selected.iter().map(|&i| full_names[i].clone()).collect(),
                scores: sel.selected.iter().map(|&i| score_of[&i]).collect(),
            }
        }
    }
}

/// The search space the configured classifier family exposes.
fn space_for(classifier: ClassifierKind) -> SearchSpace {
    match classifier {
        ClassifierKind::RandomForest => rf_space(),
        ClassifierKind::Knn => knn_space(),
    }
}

/// Full pipeline: prepare, search hyper-parameters by cross-validated
/// accuracy, fit the winner on the whole training split, evaluate on the
/// held-out split, and write `report.txt` plus the trace, score, and model
/// artifacts.
pub fn run(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    let master_seed = cfg.run.seed;
    let mut clock = StageClock::new();
    let prepared = prepare(cfg, &mut clock)?;

    let space = space_for(cfg.model.classifier);
    let t = Instant::now();
    let objective = cv_objective(
        &prepared.train,
        &space,
        cfg.optimize.folds,
        derive_seed(master_seed, STREAM_CV),
    );
    let trace = run_search(
        cfg.optimize.optimizer,
        &space,
        &objective,
        cfg.optimize.budget,
        derive_seed(master_seed, STREAM_OPT),
        &cfg.optimize.settings,
    )
    .map_err(stage_err("optimize"))?;
    clock.record("optimize", t);
    let best_hp =
        candidate_to_hyperparams(&space, &trace.best.candidate).map_err(stage_err("optimize"))?;

    let t = Instant::now();
    let model = Model::fit(&prepared.train, best_hp, derive_seed(master_seed, STREAM_FIT))
        .map_err(stage_err("fit"))?;
    clock.record("fit", t);

    let t = Instant::now();
    let predictions = model.predict(&prepared.test.features).map_err(stage_err("evaluate"))?;
    let cm = eval::confusion(&predictions, &prepared.test.labels).map_err(stage_err("evaluate"))?;
    let metrics = eval::metrics(&cm).map_err(stage_err("evaluate"))?;
    clock.record("evaluate", t);

    let report = RunReport {
        report_version: REPORT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        seed: master_seed,
        stages: clock.entries,
        data: prepared.data,
        features: prepared.features,
        optimize: Some(OptimizeSummary {
            optimizer: trace.optimizer.id().to_string(),
            budget: cfg.optimize.budget,
            budget_used: trace.budget_used,
            folds: cfg.optimize.folds,
            best_candidate: space.format_candidate(&trace.best.candidate),
            best_score: trace.best.score,
            best_eval_index: trace.best.eval_index,
        }),
        model: best_hp.describe(),
        test: TestSummary { confusion: cm, metrics },
    };

    let bundle = ReportBundle {
        report: Some(&report),
        trace: Some((&trace, &space)),
        scores: prepared
            .selection
            .as_ref()
            .map(|sel| (sel, prepared.full_names.as_slice())),
        model_text: Some(model.to_text()),
        ..Default::default()
    };
    emit_report(&bundle, &cfg.run.out_dir)?;
    Ok(report)
}

/// Like [`run`] but with the fixed `[model]` hyper-parameters instead of a
/// search — the quick way to judge one configuration.
pub fn evaluate(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    let master_seed = cfg.run.seed;
    let mut clock = StageClock::new();
    let prepared = prepare(cfg, &mut clock)?;
    clock.disabled("optimize");

    let hp = cfg.model.hyperparams();
    let t = Instant::now();
    let model = Model::fit(&prepared.train, hp, derive_seed(master_seed, STREAM_FIT))
        .map_err(stage_err("fit"))?;
    clock.record("fit", t);

    let t = Instant::now();
    let predictions = model.predict(&prepared.test.features).map_err(stage_err("evaluate"))?;
    let cm = eval::confusion(&predictions, &prepared.test.labels).map_err(stage_err("evaluate"))?;
    let metrics = eval::metrics(&cm).map_err(stage_err("evaluate"))?;
    clock.record("evaluate", t);

    let report = RunReport {
        report_version: REPORT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        seed: master_seed,
        stages: clock.entries,
        data: prepared.data,
        features: prepared.features,
        optimize: None,
        model: hp.describe(),
        test: TestSummary { confusion: cm, metrics },
    };
    let bundle = ReportBundle {
        report: Some(&report),
        scores: prepared
            .selection
            .as_ref()
            .map(|sel| (sel, prepared.full_names.as_slice())),
        model_text: Some(model.to_text()),
        ..Default::default()
    };
    emit_report(&bundle, &cfg.run.out_dir)?;
    Ok(report)
}

/// Ingest + clean only: writes the encoded, label-binarized dataset (before
/// any normalization) as `preprocessed.csv` and returns it.
pub fn preprocess(cfg: &PipelineConfig) -> Result<Dataset, PipelineError> {
    let raw = data::load_csv(&cfg.data.path, &cfg.data.label_column, cfg.data.delimiter)
        .map_err(stage_err("ingest"))?;
    let policy = label_policy(cfg)?;
    let dataset =
        data::preprocess(&raw, &policy, cfg.data.non_finite).map_err(stage_err("preprocess"))?;

    std::fs::create_dir_all(&cfg.run.out_dir).map_err(|e| PipelineError::Io {
        path: cfg.run.out_dir.display().to_string(),
        source: e,
    })?;
    let path = cfg.run.out_dir.join(PREPROCESSED_FILE);
    if let Err(e) = data::write_csv(&dataset, &path) {
        let _ = std::fs::remove_file(&path);
        return Err(PipelineError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e),
        });
    }
    Ok(dataset)
}

/// Sweeps training-set sizes with the fixed `[model]` classifier and writes
/// `learning_curve.csv`. Honors the oversampling switch so curves before
/// and after rebalancing can be compared. Returns the curve and the
/// minimum-size readout `(size, converged)`.
pub fn learning_curve(cfg: &PipelineConfig) -> Result<(LearningCurve, (usize, bool)), PipelineError> {
    let master_seed = cfg.run.seed;
    let mut clock = StageClock::new();
    let mut dataset = load_prepared_dataset(cfg, &mut clock)?;
    // Without a train/test split, train-only normalization means "the whole
    // sweep input" — same fit, just not deferred.
    if cfg.data.normalize == NormalizeMode::TrainOnly {
        let params = data::fit_zscore(&dataset).map_err(stage_err("normalize"))?;
        dataset = data::apply_zscore(&dataset, &params).map_err(stage_err("normalize"))?;
    }
    smote_stage(cfg, master_seed, &mut clock, &mut dataset)?;

    let curve = eval::learning_curve(
        &dataset,
        cfg.model.hyperparams(),
        &cfg.curve.fractions,
        cfg.curve.folds,
        derive_seed(master_seed, STREAM_CURVE),
    )
    .map_err(stage_err("learning-curve"))?;
    let minimum = eval::minimum_training_size(&curve, cfg.curve.epsilon)
        .map_err(stage_err("learning-curve"))?;

    let bundle = ReportBundle { curve: Some(&curve), ..Default::default() };
    emit_report(&bundle, &cfg.run.out_dir)?;
    Ok((curve, minimum))
}

/// Scores every feature on the full cleaned dataset (no split, no
/// oversampling) and writes `feature_scores.csv`. Returns the selection and
/// the feature names the score table indexes into.
pub fn select_features(
    cfg: &PipelineConfig,
) -> Result<(SelectionResult, Vec<String>), PipelineError> {
    let Some(method) = cfg.features.method else {
        return Err(PipelineError::Config(
            "features.method = none leaves nothing to score".to_string(),
        ));
    };
    let mut clock = StageClock::new();
    let mut dataset = load_prepared_dataset(cfg, &mut clock)?;
    if cfg.data.normalize == NormalizeMode::TrainOnly {
        let params = data::fit_zscore(&dataset).map_err(stage_err("normalize"))?;
        dataset = data::apply_zscore(&dataset, &params).map_err(stage_err("normalize"))?;
    }
    let sel = run_selection(method, cfg, &dataset).map_err(stage_err("select"))?;
    let names = dataset.feature_names.clone();

    let bundle =
        ReportBundle { scores: Some((&sel, names.as_slice())), ..Default::default() };
    emit_report(&bundle, &cfg.run.out_dir)?;
    Ok((sel, names))
}

/// Runs just the hyper-parameter search on the prepared training split and
/// writes `trace.csv`. Returns the trace plus the space for formatting.
pub fn optimize(cfg: &PipelineConfig) -> Result<(OptimizationTrace, SearchSpace), PipelineError> {
    let master_seed = cfg.run.seed;
    let mut clock = StageClock::new();
    let prepared = prepare(cfg, &mut clock)?;

    let space = space_for(cfg.model.classifier);
    let trace = {
        let objective = cv_objective(
            &prepared.train,
            &space,
            cfg.optimize.folds,
            derive_seed(master_seed, STREAM_CV),
        );
        run_search(
            cfg.optimize.optimizer,
            &space,
            &objective,
            cfg.optimize.budget,
            derive_seed(master_seed, STREAM_OPT),
            &cfg.optimize.settings,
        )
        .map_err(stage_err("optimize"))?
    };

    let bundle = ReportBundle { trace: Some((&trace, &space)), ..Default::default() };
    emit_report(&bundle, &cfg.run.out_dir)?;
    Ok((trace, space))
}

/// Projects the cleaned, normalized dataset onto its first two principal
/// components and writes `pca.csv` (pc1, pc2, label per row).
pub fn pca(cfg: &PipelineConfig) -> Result<Pca2, PipelineError> {
    let mut clock = StageClock::new();
    let mut dataset = load_prepared_dataset(cfg, &mut clock)?;
    if cfg.data.normalize == NormalizeMode::TrainOnly {
        let params = data::fit_zscore(&dataset).map_err(stage_err("normalize"))?;
        dataset = data::apply_zscore(&dataset, &params).map_err(stage_err("normalize"))?;
    }
    let projection = eval::pca2(&dataset.features).map_err(stage_err("pca"))?;

    let bundle = ReportBundle {
        pca: Some((&projection, dataset.labels.as_slice())),
        ..Default::default()
    };
    emit_report(&bundle, &cfg.run.out_dir)?;
    Ok(projection)
}

/// Strips the volatile parts out of rendered artifacts so two runs can be
/// compared byte-for-byte: the `[timing]` section of a report, and the
/// `wall_time` column of a trace CSV.
pub fn strip_volatile(text: &str) -> String {
    let mut out = String::new();
    let mut in_timing = false;
    let is_trace = text.starts_with("eval_index,candidate,score,wall_time");
    for line in text.lines() {
        if is_trace {
            let cut = line.rfind(',').map_or(line, |i| &line[..i]);
            out.push_str(cut);
            out.push('\n');
            continue;
        }
        if line.starts_with('[') {
            in_timing = line == "[timing]";
        }
        if !in_timing {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}
