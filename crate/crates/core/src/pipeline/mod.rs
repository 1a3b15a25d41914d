//! Cohort-level commands behind the `cmr-pipeline` binary.
//!
//! Every command reads a manifest, processes cases independently on a
//! rayon pool of `jobs` threads and writes results in manifest order, so
//! the thread count never changes an output byte. Each output directory
//! receives a `provenance.json`, and `errors.json` when a case fails.

mod commands;
mod config;
mod preview;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use commands::{
    augment, evaluate, fit_histogram, load_manifest, preprocess, preprocess_case, preview, spatial_steps, split,
    AugmentedCase, PreparedCase,
};
pub use config::{
    AugmentConfig, CropConfig, CropMode, PipelineConfig, SpacingConfig, StandardizeConfig, StandardizeStage,
};
pub use preview::{montage, PreviewPanel};

use crate::error::{Error, Result};
use crate::io::manifest::relative_to;

pub const TOOL_NAME: &str = "cmr-pipeline";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const ERRORS_FILE: &str = "errors.json";

/// Settings shared by all commands.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: PipelineConfig,
    pub seed: u64,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub keep_going: bool,
}

impl RunContext {
    pub fn new(config: PipelineConfig, seed: u64) -> Self {
        Self {
            config,
            seed,
            jobs: 1,
            keep_going: false,
        }
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs;
        self
    }

    pub fn keep_going(mut self, yes: bool) -> Self {
        self.keep_going = yes;
        self
    }

    /// Runs `f` over `0..n` and returns results in index order. Without
    /// `keep_going`, cases not yet started are skipped after a failure.
    fn run_cases<T: Send>(
        &self,
        ids: &[String],
        f: impl Fn(usize) -> Result<T> + Sync,
    ) -> Result<(Vec<Option<T>>, Vec<CaseFailure>)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let abort = AtomicBool::new(false);
        let outcomes: Vec<Option<Result<T>>> = pool.install(|| {
            (0..ids.len())
                .into_par_iter()
                .map(|i| {
                    if abort.load(Ordering::Relaxed) {
                        return None;
                    }
                    let r = f(i);
                    if r.is_err() && !self.keep_going {
                        abort.store(true, Ordering::Relaxed);
                    }
                    Some(r)
                })
                .collect()
        });
        let mut results = Vec::with_capacity(ids.len());
        let mut failures = Vec::new();
        for (id, outcome) in ids.iter().zip(outcomes) {
            match outcome {
                Some(Ok(v)) => results.push(Some(v)),
                Some(Err(e)) => {
                    failures.push(CaseFailure::new(id, &e));
                    results.push(None);
                }
                None => results.push(None),
            }
        }
        Ok((results, failures))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub case_id: String,
    pub kind: String,
    pub message: String,
}

impl CaseFailure {
    fn new(case_id: &str, e: &Error) -> Self {
        Self {
            case_id: case_id.to_owned(),
            kind: e.kind().to_owned(),
            message: e.to_string(),
        }
    }
}

/// Outcome of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub cases_total: usize,
    pub cases_ok: usize,
    /// Cases never started because an earlier failure stopped the run.
    pub cases_skipped: usize,
    pub failures: Vec<CaseFailure>,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    fn from_cases<T>(command: &str, results: &[Option<T>], failures: Vec<CaseFailure>) -> Self {
        let ok = results.iter().filter(|r| r.is_some()).count();
        Self {
            command: command.to_owned(),
            cases_total: results.len(),
            cases_ok: ok,
            cases_skipped: results.len() - ok - failures.len(),
            failures,
            outputs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    /// Relative to the output directory when possible.
    pub path: PathBuf,
    /// `None` for directories.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

/// Written next to every command's outputs. Carries no timestamps, host
/// names or thread counts, so identical runs produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub inputs: Vec<InputRecord>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl Provenance {
    fn new(command: &str, ctx: &RunContext, output: &Path, inputs: &[&Path]) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(InputRecord {
                    path: relative_to(p, output),
                    sha256: if p.is_dir() { None } else { Some(file_sha256(p)?) },
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            tool: TOOL_NAME.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            seed: ctx.seed,
            config_hash: ctx.config.hash(),
            config: ctx.config.clone(),
            inputs,
            details: serde_json::Value::Null,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Creates `output`, clears a stale error report and returns the
/// provenance skeleton.
fn start(command: &str, ctx: &RunContext, output: &Path, inputs: &[&Path]) -> Result<Provenance> {
    ctx.config.validate()?;
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    let errors = output.join(ERRORS_FILE);
    if errors.exists() {
        std::fs::remove_file(&errors).map_err(|e| Error::io(&errors, e))?;
    }
    Provenance::new(command, ctx, output, inputs)
}

fn finish(output: &Path, provenance: &Provenance, mut report: RunReport) -> Result<RunReport> {
    let prov_path = output.join(PROVENANCE_FILE);
    write_json(&prov_path, provenance)?;
    report.outputs.push(prov_path);
    if !report.failures.is_empty() {
        let path = output.join(ERRORS_FILE);
        write_json(&path, &report)?;
        report.outputs.push(path);
    }
    Ok(report)
}
