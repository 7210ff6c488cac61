//! The run report and its artifact files.
//!
//! A report is a structured text file with stable key order — identical runs
//! emit byte-identical files, which is what makes determinism checkable with
//! `diff` (after dropping the `[timing]` section, the only part allowed to
//! vary). [`parse_report`] inverts [`render_report`] exactly, so the report
//! doubles as a machine-readable result record, not just a human summary.
//!
//! [`emit_report`] writes the report plus whatever CSV side-files the run
//! produced: the optimization trace, the ranked feature scores, the learning
//! curve, and the 2-D projection. If any file fails mid-write, everything
//! already written by the call is removed — no half-reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::eval::{ConfusionMatrix, LearningCurve, MetricsReport, Pca2};
use crate::feature_selection::SelectionResult;
use crate::hyperopt::{OptimizationTrace, SearchSpace};
use crate::pipeline::PipelineError;

/// One pipeline stage's wall-clock entry. `seconds` is `None` when the
/// stage was disabled by configuration; enabled stages always report a
/// time, rounded to millisecond resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: Option<f64>,
}

/// Row counts before and after the oversampling stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoteSummary {
    pub train_rows: usize,
    pub train_normal: usize,
    pub train_attack: usize,
}

/// Dataset shape as the pipeline saw it.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSummary {
    pub rows: usize,
    pub features: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_normal: usize,
    pub train_attack: usize,
    /// Post-oversampling counts; `None` when the stage was disabled or
    /// found nothing to add.
    pub smote: Option<SmoteSummary>,
}

/// What feature selection kept. With `method = "none"` the pipeline used
/// every feature and the name/score lists stay empty.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSummary {
    pub method: String,
    pub policy: Option<String>,
    pub bins: Option<usize>,
    pub mode: Option<String>,
    /// Number of features the model consumed.
    pub kept: usize,
    /// Kept feature names, descending score.
    pub names: Vec<String>,
    /// Scores aligned with `names`.
    pub scores: Vec<f64>,
}

/// Outcome of the hyper-parameter search, when one ran.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSummary {
    pub optimizer: String,
    pub budget: usize,
    pub budget_used: usize,
    pub folds: usize,
    pub best_candidate: String,
    pub best_score: f64,
    pub best_eval_index: usize,
}

/// Held-out test results: raw confusion counts plus the derived metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSummary {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
}

/// Everything a finished run reports. Field order here is emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub report_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub stages: Vec<StageTiming>,
    pub data: DataSummary,
    pub features: FeatureSummary,
    pub optimize: Option<OptimizeSummary>,
    /// Human-readable fitted-model settings, e.g. `rf trees=90 criterion=entropy`.
    pub model: String,
    pub test: TestSummary,
}

/// Report schema version; bump when the emitted keys change.
pub const REPORT_VERSION: u32 = 1;

/// File names emitted into the output directory.
pub const REPORT_FILE: &str = "report.txt";
pub const TRACE_FILE: &str = "trace.csv";
pub const SCORES_FILE: &str = "feature_scores.csv";
pub const CURVE_FILE: &str = "learning_curve.csv";
pub const PCA_FILE: &str = "pca.csv";
pub const MODEL_FILE: &str = "model.txt";

fn join_list<T: ToString>(items: &[T]) -> String {
    if items.is_empty() {
        "none".to_string()
    } else {
        items.iter().map(T::to_string).collect::<Vec<_>>().join(";")
    }
}

/// Renders the report in its canonical byte-stable form.
pub fn render_report(r: &RunReport) -> String {
    let mut s = String::new();
    let opt_string = |v: &Option<String>| v.clone().unwrap_or_else(|| "none".to_string());
    let opt_usize = |v: &Option<usize>| v.map_or("none".to_string(), |v| v.to_string());

    let _ = writeln!(s, "[meta]");
    let _ = writeln!(s, "report_version = {}", r.report_version);
    let _ = writeln!(s, "tool_version = {}", r.tool_version);
    let _ = writeln!(s, "config_hash = {}", r.config_hash);
    let _ = writeln!(s, "seed = {}", r.seed);

    let _ = writeln!(s, "[timing]");
    for t in &r.stages {
        match t.seconds {
            Some(secs) => {
                let _ = writeln!(s, "{} = {secs}", t.stage);
            }
            None => {
                let _ = writeln!(s, "{} = disabled", t.stage);
            }
        }
    }

    let _ = writeln!(s, "[data]");
    let _ = writeln!(s, "rows = {}", r.data.rows);
    let _ = writeln!(s, "features = {}", r.data.features);
    let _ = writeln!(s, "train_rows = {}", r.data.train_rows);
    let _ = writeln!(s, "test_rows = {}", r.data.test_rows);
    let _ = writeln!(s, "train_normal = {}", r.data.train_normal);
    let _ = writeln!(s, "train_attack = {}", r.data.train_attack);
    if let Some(sm) = &r.data.smote {
        let _ = writeln!(s, "smote_train_rows = {}", sm.train_rows);
        let _ = writeln!(s, "smote_train_normal = {}", sm.train_normal);
        let _ = writeln!(s, "smote_train_attack = {}", sm.train_attack);
    }

    let _ = writeln!(s, "[features]");
    let _ = writeln!(s, "method = {}", r.features.method);
    let _ = writeln!(s, "policy = {}", opt_string(&r.features.policy));
    let _ = writeln!(s, "bins = {}", opt_usize(&r.features.bins));
    let _ = writeln!(s, "mode = {}", opt_string(&r.features.mode));
    let _ = writeln!(s, "kept = {}", r.features.kept);
    let _ = writeln!(s, "names = {}", join_list(&r.features.names));
    let _ = writeln!(s, "scores = {}", join_list(&r.features.scores));

    let _ = writeln!(s, "[optimize]");
    match &r.optimize {
        None => {
            let _ = writeln!(s, "enabled = false");
        }
        Some(o) => {
            let _ = writeln!(s, "enabled = true");
            let _ = writeln!(s, "optimizer = {}", o.optimizer);
            let _ = writeln!(s, "budget = {}", o.budget);
            let _ = writeln!(s, "budget_used = {}", o.budget_used);
            let _ = writeln!(s, "folds = {}", o.folds);
            let _ = writeln!(s, "best_candidate = {}", o.best_candidate);
            let _ = writeln!(s, "best_score = {}", o.best_score);
            let _ = writeln!(s, "best_eval_index = {}", o.best_eval_index);
        }
    }

    let _ = writeln!(s, "[model]");
    let _ = writeln!(s, "settings = {}", r.model);

    let _ = writeln!(s, "[test]");
    let c = &r.test.confusion;
    let _ = writeln!(s, "true_positive = {}", c.true_positive);
    let _ = writeln!(s, "true_negative = {}", c.true_negative);
    let _ = writeln!(s, "false_positive = {}", c.false_positive);
    let _ = writeln!(s, "false_negative = {}", c.false_negative);
    let m = &r.test.metrics;
    let _ = writeln!(s, "accuracy = {}", m.accuracy);
    let _ = writeln!(s, "precision = {}", m.precision);
    let _ = writeln!(s, "recall = {}", m.recall);
    let _ = writeln!(s, "far = {}", m.far);
    let _ = writeln!(s, "precision_defined = {}", m.precision_defined);
    let _ = writeln!(s, "recall_defined = {}", m.recall_defined);
    let _ = writeln!(s, "far_defined = {}", m.far_defined);
    s
}

/// Parses a rendered report back into the exact [`RunReport`] it came from.
pub fn parse_report(text: &str) -> Result<RunReport, PipelineError> {
    let bad = |msg: String| PipelineError::Config(format!("report parse: {msg}"));
    let mut section = String::new();
    // (section, key) → value, plus the timing lines in file order.
    let mut kv: std::collections::BTreeMap<(String, String), String> = Default::default();
    let mut stages: Vec<StageTiming> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            section = name
                .strip_suffix(']')
                .ok_or_else(|| bad(format!("line {}: unterminated section", idx + 1)))?
                .to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected `key = value`", idx + 1)))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if section == "timing" {
            let seconds = if value == "disabled" {
                None
            } else {
                Some(value.parse::<f64>().map_err(|e| bad(format!("stage {key}: {e}")))?)
            };
            stages.push(StageTiming { stage: key, seconds });
        } else {
            kv.insert((section.clone(), key), value);
        }
    }

    fn get<'a>(
        kv: &'a std::collections::BTreeMap<(String, String), String>,
        section: &str,
        key: &str,
    ) -> Result<&'a str, PipelineError> {
        kv.get(&(section.to_string(), key.to_string())).map(String::as_str).ok_or_else(|| {
            PipelineError::Config(format!("report parse: missing {section}.{key}"))
        })
    }
    fn parse<T>(
        kv: &std::collections::BTreeMap<(String, String), String>,
        section: &str,
        key: &str,
    ) -> Result<T, PipelineError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        get(kv, section, key)?.parse::<T>().map_err(|e| {
            PipelineError::Config(format!("report parse: bad {section}.{key}: {e}"))
        })
    }
    fn opt<T>(
        kv: &std::collections::BTreeMap<(String, String), String>,
        section: &str,
        key: &str,
    ) -> Result<Option<T>, PipelineError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match get(kv, section, key)? {
            "none" => Ok(None),
            v => v.parse::<T>().map(Some).map_err(|e| {
                PipelineError::Config(format!("report parse: bad {section}.{key}: {e}"))
            }),
        }
    }
    fn list<T>(
        kv: &std::collections::BTreeMap<(String, String), String>,
        section: &str,
        key: &str,
    ) -> Result<Vec<T>, PipelineError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match get(kv, section, key)? {
            "none" => Ok(Vec::new()),
            v => v
                .split(';')
                .map(|item| {
                    item.parse::<T>().map_err(|e| {
                        PipelineError::Config(format!("report parse: bad {section}.{key}: {e}"))
                    })
                })
                .collect(),
        }
    }

    let smote = if kv.contains_key(&("data".to_string(), "smote_train_rows".to_string())) {
        Some(SmoteSummary {
            train_rows: parse(&kv, "data", "smote_train_rows")?,
            train_normal: parse(&kv, "data", "smote_train_normal")?,
            train_attack: parse(&kv, "data", "smote_train_attack")?,
        })
    } else {
        None
    };

    let optimize = if get(&kv, "optimize", "enabled")? == "true" {
        Some(OptimizeSummary {
            optimizer: get(&kv, "optimize", "optimizer")?.to_string(),
            budget: parse(&kv, "optimize", "budget")?,
            budget_used: parse(&kv, "optimize", "budget_used")?,
            folds: parse(&kv, "optimize", "folds")?,
            best_candidate: get(&kv, "optimize", "best_candidate")?.to_string(),
            best_score: parse(&kv, "optimize", "best_score")?,
            best_eval_index: parse(&kv, "optimize", "best_eval_index")?,
        })
    } else {
        None
    };

    Ok(RunReport {
        report_version: parse(&kv, "meta", "report_version")?,
        tool_version: get(&kv, "meta", "tool_version")?.to_string(),
        config_hash: get(&kv, "meta", "config_hash")?.to_string(),
        seed: parse(&kv, "meta", "seed")?,
        stages,
        data: DataSummary {
            rows: parse(&kv, "data", "rows")?,
            features: parse(&kv, "data", "features")?,
            train_rows: parse(&kv, "data", "train_rows")?,
            test_rows: parse(&kv, "data", "test_rows")?,
            train_normal: parse(&kv, "data", "train_normal")?,
            train_attack: parse(&kv, "data", "train_attack")?,
            smote,
        },
        features: FeatureSummary {
            method: get(&kv, "features", "method")?.to_string(),
            policy: opt(&kv, "features", "policy")?,
            bins: opt(&kv, "features", "bins")?,
            mode: opt(&kv, "features", "mode")?,
            kept: parse(&kv, "features", "kept")?,
            names: list(&kv, "features", "names")?,
            scores: list(&kv, "features", "scores")?,
        },
        optimize,
        model: get(&kv, "model", "settings")?.to_string(),
        test: TestSummary {
            confusion: ConfusionMatrix {
                true_positive: parse(&kv, "test", "true_positive")?,
                true_negative: parse(&kv, "test", "true_negative")?,
                false_positive: parse(&kv, "test", "false_positive")?,
                false_negative: parse(&kv, "test", "false_negative")?,
            },
            metrics: MetricsReport {
                accuracy: parse(&kv, "test", "accuracy")?,
                precision: parse(&kv, "test", "precision")?,
                recall: parse(&kv, "test", "recall")?,
                far: parse(&kv, "test", "far")?,
                precision_defined: parse(&kv, "test", "precision_defined")?,
                recall_defined: parse(&kv, "test", "recall_defined")?,
                far_defined: parse(&kv, "test", "far_defined")?,
            },
        },
    })
}

/// The artifacts one command wants written, beyond the report itself.
#[derive(Default)]
pub struct ReportBundle<'a> {
    pub report: Option<&'a RunReport>,
    /// Trace plus the space that formats its candidates.
    pub trace: Option<(&'a OptimizationTrace, &'a SearchSpace)>,
    /// Ranked scores plus the feature names they index into.
    pub scores: Option<(&'a SelectionResult, &'a [String])>,
    pub curve: Option<&'a LearningCurve>,
    /// Projection plus the class label of each projected row.
    pub pca: Option<(&'a Pca2, &'a [u8])>,
    /// Serialized fitted model.
    pub model_text: Option<String>,
}

/// Writes every artifact in the bundle into `dir` (created if missing).
/// Returns the paths written. On any failure the files this call already
/// created are removed before the error surfaces.
pub fn emit_report(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = emit_all(bundle, dir, &mut written);
    if result.is_err() {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
        return result.map(|_| Vec::new());
    }
    Ok(written)
}

fn emit_all(
    bundle: &ReportBundle,
    dir: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<(), PipelineError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source: std::io::Error| PipelineError::Io { path, source }
    };

    if let Some(report) = bundle.report {
        let path = dir.join(REPORT_FILE);
        std::fs::write(&path, render_report(report)).map_err(io_err(&path))?;
        written.push(path);
    }

    if let Some((trace, space)) = bundle.trace {
        let path = dir.join(TRACE_FILE);
        let mut w = csv::Writer::from_path(&path).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e),
        })?;
        let csv_err = |e: csv::Error| PipelineError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e),
        };
        w.write_record(["eval_index", "candidate", "score", "wall_time"]).map_err(csv_err)?;
        for t in &trace.trials {
            w.write_record([
                t.eval_index.to_string(),
                space.format_candidate(&t.candidate),
                t.score.to_string(),
                t.wall_time.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&path))?;
        written.push(path);
    }

    if let Some((sel, names)) = bundle.scores {
        let path = dir.join(SCORES_FILE);
        crate::feature_selection::write_scores_csv(names, sel, &path).map_err(|e| {
            PipelineError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e),
            }
        })?;
        written.push(path);
    }

    if let Some(curve) = bundle.curve {
        let path = dir.join(CURVE_FILE);
        let mut text = String::from("train_size,train_acc,cv_acc\n");
        for p in &curve.points {
            let _ = writeln!(text, "{},{},{}", p.train_size, p.train_acc, p.cv_acc);
        }
        std::fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
    }

    if let Some((pca, labels)) = bundle.pca {
        let path = dir.join(PCA_FILE);
        let mut text = String::from("pc1,pc2,label\n");
        for (row, label) in pca.projection.iter().zip(labels) {
            let _ = writeln!(text, "{},{},{label}", row[0], row[1]);
        }
        std::fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
    }

    if let Some(model_text) = &bundle.model_text {
        let path = dir.join(MODEL_FILE);
        std::fs::write(&path, model_text).map_err(io_err(&path))?;
        written.push(path);
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> RunReport {
        RunReport {
            report_version: REPORT_VERSION,
            tool_version: "0.1.0".to_string(),
            config_hash: "ab".repeat(32),
            seed: 42,
            stages: vec![
                StageTiming { stage: "ingest".into(), seconds: Some(0.012) },
                StageTiming { stage: "smote".into(), seconds: None },
                StageTiming { stage: "fit".into(), seconds: Some(1.5) },
            ],
            data: DataSummary {
                rows: 5000,
                features: 10,
                train_rows: 3500,
                test_rows: 1500,
                train_normal: 3150,
                train_attack: 350,
                smote: Some(SmoteSummary {
                    train_rows: 6300,
                    train_normal: 3150,
                    train_attack: 3150,
                }),
            },
            features: FeatureSummary {
                method: "igbfs".into(),
                policy: Some("relative-threshold:0.01".into()),
                bins: Some(10),
                mode: None,
                kept: 2,
                names: vec!["duration".into(), "packets".into()],
                scores: vec![0.91, 0.455],
            },
            optimize: Some(OptimizeSummary {
                optimizer: "bo-tpe".into(),
                budget: 50,
                budget_used: 50,
                folds: 3,
                best_candidate: "trees=90;criterion=entropy".into(),
                best_score: 0.99321,
                best_eval_index: 23,
            }),
            model: "rf trees=90 criterion=entropy".into(),
            test: TestSummary {
                confusion: ConfusionMatrix {
                    true_positive: 140,
                    true_negative: 1350,
                    false_positive: 4,
                    false_negative: 6,
                },
                metrics: MetricsReport {
                    accuracy: 0.9933333333333333,
                    precision: 140.0 / 144.0,
                    recall: 140.0 / 146.0,
                    far: 4.0 / 1354.0,
                    precision_defined: true,
                    recall_defined: true,
                    far_defined: true,
                },
            },
        }
    }

    #[test]
    fn report_round_trips_exactly() {
        let r = sample_report();
        let parsed = parse_report(&render_report(&r)).unwrap();
        assert_eq!(r, parsed);
    }

    #[test]
    fn rendering_is_byte_stable() {
        let r = sample_report();
        assert_eq!(render_report(&r), render_report(&r.clone()));
        // Round-tripping and re-rendering changes nothing either.
        let reparsed = parse_report(&render_report(&r)).unwrap();
        assert_eq!(render_report(&r), render_report(&reparsed));
    }

    #[test]
    fn disabled_sections_round_trip() {
        let mut r = sample_report();
        r.data.smote = None;
        r.optimize = None;
        r.features = FeatureSummary {
            method: "none".into(),
            policy: None,
            bins: None,
            mode: None,
            kept: 10,
            names: vec![],
            scores: vec![],
        };
        let rendered = render_report(&r);
        assert!(rendered.contains("enabled = false"));
        assert!(!rendered.contains("smote_train_rows"));
        assert_eq!(parse_report(&rendered).unwrap(), r);
    }

    #[test]
    fn disabled_stage_renders_as_disabled() {
        let rendered = render_report(&sample_report());
        assert!(rendered.contains("smote = disabled"));
        assert!(rendered.contains("ingest = 0.012"));
    }

    #[test]
    fn parse_rejects_missing_keys() {
        let err = parse_report("[meta]\nreport_version = 1\n").unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }

    #[test]
    fn trace_csv_has_one_row_per_trial() {
        use crate::hyperopt::{run_search, OptimizerId, OptimizerSettings};

        let space = crate::hyperopt::knn_space();
        let objective = |c: &crate::hyperopt::Candidate| match c[0] {
            crate::hyperopt::ParamValue::Int(k) => Ok(1.0 / (1.0 + k as f64)),
            _ => Ok(0.0),
        };
        let trace = run_search(
            OptimizerId::RandomSearch,
            &space,
            &objective,
            12,
            7,
            &OptimizerSettings::default(),
        )
        .unwrap();

        let dir = tempfile::tempdir().unwrap();
        let bundle =
            ReportBundle { trace: Some((&trace, &space)), ..Default::default() };
        let written = emit_report(&bundle, dir.path()).unwrap();
        assert_eq!(written, vec![dir.path().join(TRACE_FILE)]);

        let text = std::fs::read_to_string(&written[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "eval_index,candidate,score,wall_time");
        assert_eq!(lines.len() - 1, trace.trials.len());
        assert!(lines[1].starts_with("0,k="));
    }

    #[test]
    fn emission_failure_removes_partial_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample_report();
        // A curve pointing at an unwritable path is simulated by making the
        // directory read-only after the report file would land — simpler: use
        // a bundle whose second artifact targets a directory path collision.
        std::fs::create_dir(dir.path().join(TRACE_FILE)).unwrap();
        let space = crate::hyperopt::knn_space();
        let trace = crate::hyperopt::OptimizationTrace {
            optimizer: crate::hyperopt::OptimizerId::RandomSearch,
            trials: vec![],
            best: crate::hyperopt::Trial {
                candidate: vec![],
                score: 0.0,
                eval_index: 0,
                wall_time: 0.0,
            },
            budget_used: 0,
            seed: 0,
        };
        let bundle = ReportBundle {
            report: Some(&r),
            trace: Some((&trace, &space)),
            ..Default::default()
        };
        let err = emit_report(&bundle, dir.path()).unwrap_err();
        assert!(matches!(err, PipelineError::Io { .. }));
        assert!(
            !dir.path().join(REPORT_FILE).exists(),
            "report written before the failure must be cleaned up"
        );
    }

    #[test]
    fn curve_and_pca_files_have_expected_shape() {
        let dir = tempfile::tempdir().unwrap();
        let curve = LearningCurve {
            points: vec![
                crate::eval::CurvePoint { train_size: 20, train_acc: 1.0, cv_acc: 0.9 },
                crate::eval::CurvePoint { train_size: 40, train_acc: 0.99, cv_acc: 0.95 },
            ],
            folds: 5,
            seed: 1,
        };
        let pca = Pca2 {
            components: [vec![1.0, 0.0], vec![0.0, 1.0]],
            explained: [0.8, 0.2],
            projection: vec![[1.5, -0.5], [-1.5, 0.5]],
        };
        let labels = vec![0u8, 1u8];
        let bundle = ReportBundle {
            curve: Some(&curve),
            pca: Some((&pca, &labels)),
            ..Default::default()
        };
        let written = emit_report(&bundle, dir.path()).unwrap();
        assert_eq!(written.len(), 2);

        let curve_text = std::fs::read_to_string(dir.path().join(CURVE_FILE)).unwrap();
        assert_eq!(curve_text, "train_size,train_acc,cv_acc\n20,1,0.9\n40,0.99,0.95\n");
        let pca_text = std::fs::read_to_string(dir.path().join(PCA_FILE)).unwrap();
        assert_eq!(pca_text, "pc1,pc2,label\n1.5,-0.5,0\n-1.5,0.5,1\n");
    }
}
