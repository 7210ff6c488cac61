//! Command-line entry point. Subcommands map one-to-one onto the functions
//! in [`nids::pipeline`]; this file only parses flags, loads the config,
//! prints a short summary, and translates errors into exit codes:
//! 0 success, 1 usage/config error, 2 data/stage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nids::pipeline::{self, config::PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(
    name = "nids",
    version,
    about = "Train and evaluate optimized intrusion-detection models from flow CSVs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (sectioned `key = value` text).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the artifact directory from the config.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Clean and encode the dataset, writing preprocessed.csv.
    Preprocess(CommonArgs),
    /// Sweep training sizes with the fixed model; write learning_curve.csv.
    LearningCurve(CommonArgs),
    /// Rank features on the full dataset; write feature_scores.csv.
    SelectFeatures(CommonArgs),
    /// Search hyper-parameters on the prepared training split; write trace.csv.
    Optimize(CommonArgs),
    /// Train the fixed model and report held-out metrics; write report.txt.
    Evaluate(CommonArgs),
    /// Full pipeline: prepare, search, fit, evaluate; write all artifacts.
    Run(CommonArgs),
    /// Project the dataset onto two principal components; write pca.csv.
    Pca(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Preprocess(a)
            | Command::LearningCurve(a)
            | Command::SelectFeatures(a)
            | Command::Optimize(a)
            | Command::Evaluate(a)
            | Command::Run(a)
            | Command::Pca(a) => a,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land here too; they are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ PipelineError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), PipelineError> {
    let args = cli.command.args();
    let mut cfg = PipelineConfig::load(&args.config)?;
    cfg.apply_overrides(args.seed, args.out_dir.as_deref());
    let out = cfg.run.out_dir.display().to_string();

    match &cli.command {
        Command::Preprocess(_) => {
            let dataset = pipeline::preprocess(&cfg)?;
            println!(
                "cleaned {} rows x {} features -> {}/{}",
                dataset.len(),
                dataset.n_features(),
                out,
                pipeline::PREPROCESSED_FILE
            );
        }
        Command::LearningCurve(_) => {
            let (curve, (size, converged)) = pipeline::learning_curve(&cfg)?;
            for p in &curve.points {
                println!(
                    "size {:>6}  train {:.4}  cv {:.4}",
                    p.train_size, p.train_acc, p.cv_acc
                );
            }
            if converged {
                println!("minimum training size: {size} (cv accuracy plateaus there)");
            } else {
                println!("minimum training size: {size} (no plateau before the largest size)");
            }
            println!("curve written to {out}/learning_curve.csv");
        }
        Command::SelectFeatures(_) => {
            let (sel, names) = pipeline::select_features(&cfg)?;
            println!(
                "{}: kept {} of {} features -> {}/feature_scores.csv",
                sel.method.id(),
                sel.selected.len(),
                names.len(),
                out
            );
            for &i in &sel.selected {
                let score = sel.scores.iter().find(|s| s.feature_index == i).unwrap().score;
                println!("  {}  {score:.6}", names[i]);
            }
        }
        Command::Optimize(_) => {
            let (trace, space) = pipeline::optimize(&cfg)?;
            println!(
                "{}: best {} (cv accuracy {:.4}) after {} proposals -> {}/trace.csv",
                trace.optimizer.id(),
                space.format_candidate(&trace.best.candidate),
                trace.best.score,
                trace.budget_used,
                out
            );
        }
        Command::Evaluate(_) => {
            let report = pipeline::evaluate(&cfg)?;
            print_metrics(&report);
            println!("report written to {out}/report.txt");
        }
        Command::Run(_) => {
            let report = pipeline::run(&cfg)?;
            if let Some(opt) = &report.optimize {
                println!(
                    "{}: best {} (cv accuracy {:.4})",
                    opt.optimizer, opt.best_candidate, opt.best_score
                );
            }
            print_metrics(&report);
            println!("artifacts written to {out}");
        }
        Command::Pca(_) => {
            let projection = pipeline::pca(&cfg)?;
            println!(
                "projected {} rows; explained variance {:.4} / {:.4} -> {}/pca.csv",
                projection.projection.len(),
                projection.explained[0],
                projection.explained[1],
                out
            );
        }
    }
    Ok(())
}

fn print_metrics(report: &pipeline::report::RunReport) {
    let m = &report.test.metrics;
    println!(
        "test accuracy {:.4}, precision {:.4}, recall {:.4}, far {:.4}  [{}]",
        m.accuracy, m.precision, m.recall, m.far, report.model
    );
}
