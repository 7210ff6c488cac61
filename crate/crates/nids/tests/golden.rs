//! Pins the artifact formats: replays the bundled demo configuration and
//! compares every output against the checked-in copies under docs/golden/.
//! Wall-clock fields (the report's [timing] section, the trace's wall_time
//! column) are stripped before comparing; everything else must match byte
//! for byte. A deliberate format change means regenerating the golden
//! files with the demo config and updating docs/formats.md to match.

use std::fs;
use std::path::{Path, PathBuf};

use nids::pipeline::{self, config::PipelineConfig, strip_volatile};

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

/// Loads configs/demo.conf exactly as a user would run it from the repo
/// root — the relative data path stays relative so the stamped config hash
/// matches the golden report — redirecting only the output directory.
/// set_current_dir is process-wide, but both tests set the same directory
/// and write to disjoint temp dirs, so the races are harmless.
fn demo_config(out_dir: &Path) -> PipelineConfig {
    let root = repo_root();
    std::env::set_current_dir(&root).unwrap();
    let mut cfg = PipelineConfig::load(&root.join("configs/demo.conf")).unwrap();
    cfg.run.out_dir = out_dir.to_path_buf();
    cfg
}

fn assert_matches_golden(out_dir: &Path, name: &str) {
    let golden_path = repo_root().join("docs/golden").join(name);
    let golden = fs::read_to_string(&golden_path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", golden_path.display()));
    let fresh = fs::read_to_string(out_dir.join(name)).unwrap();
    assert_eq!(
        strip_volatile(&fresh),
        strip_volatile(&golden),
        "{name} drifted from docs/golden/{name}"
    );
}

#[test]
fn demo_run_reproduces_the_golden_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = demo_config(dir.path());
    pipeline::run(&cfg).unwrap();
    for name in ["report.txt", "trace.csv", "feature_scores.csv", "model.txt"] {
        assert_matches_golden(dir.path(), name);
    }
}

#[test]
fn demo_analyses_reproduce_the_golden_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = demo_config(dir.path());
    pipeline::learning_curve(&cfg).unwrap();
    pipeline::pca(&cfg).unwrap();
    pipeline::preprocess(&cfg).unwrap();
    for name in ["learning_curve.csv", "pca.csv", "preprocessed.csv"] {
        assert_matches_golden(dir.path(), name);
    }
}
