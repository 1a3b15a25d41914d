//! Writes a small phantom cohort, scans it into a manifest and splits it
//! by subject.

use cmr_pipeline::io::{build_manifest, split_subjects, NamingPattern};
use cmr_pipeline::phantom::{write_cohort, PhantomSpec};

pub fn run_example() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let spec = PhantomSpec {
        shape: [96, 96, 2],
        spacing: [1.6, 1.6, 8.0],
        ..Default::default()
    };
    write_cohort(dir.path(), &spec, 5, &[1, 2, 3, 4])?;
    std::fs::write(dir.path().join("readme.nii"), b"not a case")?;

    let scan = build_manifest(dir.path(), &NamingPattern::default())?;
    println!(
        "{} subjects, {} cases, skipped {:?}",
        scan.manifest.subjects.len(),
        scan.manifest.num_cases(),
        scan.skipped.iter().map(|p| p.file_name().unwrap()).collect::<Vec<_>>()
    );

    let split = split_subjects(&scan.manifest, 0.2, 42)?;
    println!("train {:?}\nvalidation {:?}", split.train, split.validation);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
