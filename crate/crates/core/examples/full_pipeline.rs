//! Runs the cohort commands end to end on a phantom cohort: preprocess,
//! augment, then evaluate the preprocessed labels against themselves.
//! Pass a directory to keep the outputs.

use std::path::{Path, PathBuf};

use cmr_pipeline::phantom::{write_cohort, PhantomSpec};
use cmr_pipeline::pipeline::{self, PipelineConfig, RunContext};

pub fn run_example() -> anyhow::Result<()> {
    let tmp = tempfile::tempdir()?;
    run_in(tmp.path())
}

fn run_in(root: &Path) -> anyhow::Result<()> {
    let spec = PhantomSpec {
        shape: [112, 112, 3],
        ..Default::default()
    };
    write_cohort(&root.join("raw"), &spec, 5, &[1, 4])?;

    let mut config = PipelineConfig::default();
    config.crop.size = [128, 128];
    let ctx = RunContext::new(config, 11).with_jobs(0);

    let pre = pipeline::preprocess(&ctx, &root.join("raw"), &root.join("pre"), None)?;
    println!("preprocess: {} of {} cases", pre.cases_ok, pre.cases_total);
    let aug = pipeline::augment(&ctx, &root.join("pre/manifest.json"), &root.join("aug"))?;
    println!("augment: {} files", aug.outputs.len());
    let ev = pipeline::evaluate(
        &ctx,
        &root.join("pre/manifest.json"),
        &root.join("pre"),
        &root.join("eval"),
    )?;
    anyhow::ensure!(pre.succeeded() && aug.succeeded() && ev.succeeded());
    print!("{}", std::fs::read_to_string(root.join("eval/table.txt"))?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => run_in(&PathBuf::from(dir)),
        None => run_example(),
    }
}
