use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};

use cmr_pipeline::pipeline::{self, PipelineConfig, RunContext, RunReport};
use cmr_pipeline::LabelMap;

#[derive(Parser)]
#[command(
    name = "cmr-pipeline",
    version,
    about = "Deterministic cardiac MRI preprocessing, augmentation and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Manifest JSON, or a data directory to scan with the naming pattern.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core). Never changes outputs.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// TOML or JSON pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Label codes, e.g. `lv=1,myo=2,rv=3`; overrides the config.
    #[arg(long)]
    labels: Option<LabelMap>,
    /// Process every case even after failures.
    #[arg(long)]
    keep_going: bool,
}

impl Common {
    fn context(&self) -> anyhow::Result<RunContext> {
        let mut config = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(l) = self.labels {
            config.labels = l;
        }
        Ok(RunContext::new(config, self.seed)
            .with_jobs(self.jobs)
            .keep_going(self.keep_going))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Reorient, resample, crop and standardize every case.
    Preprocess {
        #[command(flatten)]
        common: Common,
        /// Landmark model from `fit-histogram`; fitted on the training split if absent.
        #[arg(long)]
        landmarks: Option<PathBuf>,
    },
    /// Fit histogram-standardization landmarks on a (training) manifest.
    FitHistogram {
        #[command(flatten)]
        common: Common,
    },
    /// Subject-level train/validation split.
    Split {
        #[command(flatten)]
        common: Common,
    },
    /// Apply one policy-drawn artifact to every slice.
    Augment {
        #[command(flatten)]
        common: Common,
    },
    /// Dice and HD95 of predictions against manifest labels.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Directory of predicted label maps named like the inputs.
        #[arg(long)]
        predictions: PathBuf,
    },
    /// PNG montages of a slice next to each artifact.
    Preview {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        max_cases: usize,
        /// Slice index (default: middle slice).
        #[arg(long)]
        slice: Option<usize>,
    },
}

fn run(cli: &Cli) -> anyhow::Result<RunReport> {
    let out = |c: &Common| c.output.clone();
    let m = |c: &Common| c.manifest.clone();
    let report = match &cli.command {
        Command::Preprocess { common, landmarks } => {
            pipeline::preprocess(&common.context()?, &m(common), &out(common), landmarks.as_deref())
        }
        Command::FitHistogram { common } => pipeline::fit_histogram(&common.context()?, &m(common), &out(common)),
        Command::Split { common } => pipeline::split(&common.context()?, &m(common), &out(common)),
        Command::Augment { common } => pipeline::augment(&common.context()?, &m(common), &out(common)),
        Command::Evaluate { common, predictions } => {
            pipeline::evaluate(&common.context()?, &m(common), predictions, &out(common))
        }
        Command::Preview {
            common,
            max_cases,
            slice,
        } => pipeline::preview(&common.context()?, &m(common), &out(common), *max_cases, *slice),
    };
    report.context("command failed")
}

fn error_report(output: &Path, err: &anyhow::Error) {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<cmr_pipeline::Error>())
        .map_or("other", |e| e.kind());
    let body = serde_json::json!({ "kind": kind, "message": format!("{err:#}") });
    if std::fs::create_dir_all(output).is_ok() {
        let _ = std::fs::write(output.join(pipeline::ERRORS_FILE), format!("{body:#}\n"));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            println!(
                "{}: {} of {} cases ok, {} failed, {} skipped",
                report.command,
                report.cases_ok,
                report.cases_total,
                report.failures.len(),
                report.cases_skipped
            );
            for f in &report.failures {
                eprintln!("  {} [{}] {}", f.case_id, f.kind, f.message);
            }
            if report.succeeded() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let output = match &cli.command {
                Command::Preprocess { common, .. }
                | Command::FitHistogram { common }
                | Command::Split { common }
                | Command::Augment { common }
                | Command::Evaluate { common, .. }
                | Command::Preview { common, .. } => &common.output,
            };
            error_report(output, &e);
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
