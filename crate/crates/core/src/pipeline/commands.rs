use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{CropMode, PipelineConfig, StandardizeStage};
use super::{finish, preview as panels, start, write_json, RunContext, RunReport};
use crate::artifacts::augment_slice;
use crate::error::{Error, Result};
use crate::io::manifest::{nifti_stem, relative_to, CaseEntry};
use crate::io::{
    build_manifest, read_nifti, read_nifti_labels, split_subjects, write_nifti, write_nifti_labels, DataType, Manifest,
    NamingPattern, Phase,
};
use crate::metrics::{aggregate, evaluate_case, write_metrics_csv, MetricsReport};
use crate::seed::derive_slice_seed;
use crate::standardize::{fit_landmarks, standardize, LandmarkModel};
use crate::volume::{
    center_crop_or_pad, crop_or_pad_around, extract_slices, mask_centroid, reorient_to_canonical, resample,
    stack_slices, CropWindow, Interpolation, LabelVolume, Volume,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LANDMARKS_FILE: &str = "landmarks.json";
pub const SPLIT_FILE: &str = "split.json";
pub const AUGMENTED_FILE: &str = "augmented.json";

/// A case after some or all preprocessing steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCase {
    pub image: Volume,
    pub labels: Option<LabelVolume>,
    pub crop: Option<CropWindow>,
}

/// Accepts a manifest JSON file or a data directory to scan.
pub fn load_manifest(path: &Path, config: &PipelineConfig) -> Result<Manifest> {
    if path.is_dir() {
        let pattern = NamingPattern::new(&config.naming_pattern)?;
        Ok(build_manifest(path, &pattern)?.manifest)
    } else {
        Manifest::load(path)
    }
}

fn check_same_grid(image: &Volume, labels: &LabelVolume) -> Result<()> {
    let diff = (image.affine() - labels.affine()).abs().max();
    if image.shape() != labels.shape() || diff > 1e-3 {
        return Err(Error::Geometry(format!(
            "label grid {:?} does not match image grid {:?} (affine difference {diff:.2e})",
            labels.shape(),
            image.shape()
        )));
    }
    Ok(())
}

/// Reorientation and resampling, plus the crop when `crop` is set.
pub fn spatial_steps(
    image: &Volume,
    labels: Option<&LabelVolume>,
    config: &PipelineConfig,
    crop: bool,
) -> Result<PreparedCase> {
    if let Some(l) = labels {
        check_same_grid(image, l)?;
        l.check_codes(&config.labels.codes())?;
    }
    let image = reorient_to_canonical(image)?;
    let target = config.spacing.target_for(image.spacing());
    let image = resample(&image, target, Interpolation::Trilinear)?;
    let labels = labels
        .map(|l| resample(&reorient_to_canonical(l)?, target, Interpolation::Nearest))
        .transpose()?;
    let case = PreparedCase {
        image,
        labels,
        crop: None,
    };
    if crop {
        crop_case(case, config)
    } else {
        Ok(case)
    }
}

fn crop_case(case: PreparedCase, config: &PipelineConfig) -> Result<PreparedCase> {
    let c = &config.crop;
    let center = match (c.mode, &case.labels) {
        (CropMode::MaskCentroid, Some(l)) => mask_centroid(l).map(|m| [m[0], m[1]]),
        _ => None,
    };
    let (image, window) = match center {
        Some(ctr) => crop_or_pad_around(&case.image, ctr, c.size, c.pad_value)?,
        None => center_crop_or_pad(&case.image, c.size, c.pad_value)?,
    };
    let labels = case
        .labels
        .map(|l| match center {
            Some(ctr) => crop_or_pad_around(&l, ctr, c.size, 0).map(|r| r.0),
            None => center_crop_or_pad(&l, c.size, 0).map(|r| r.0),
        })
        .transpose()?;
    Ok(PreparedCase {
        image,
        labels,
        crop: Some(window),
    })
}

fn crop_first(config: &PipelineConfig) -> bool {
    config.standardize.stage == StandardizeStage::AfterCrop
}

/// The full chain reorient → resample → crop → standardize (crop and
/// standardize swap when the config says so).
pub fn preprocess_case(
    image: &Volume,
    labels: Option<&LabelVolume>,
    config: &PipelineConfig,
    model: &LandmarkModel,
) -> Result<PreparedCase> {
    let mut case = spatial_steps(image, labels, config, crop_first(config))?;
    case.image = standardize(&case.image, model)?;
    if crop_first(config) {
        Ok(case)
    } else {
        crop_case(case, config)
    }
}

fn case_ids(manifest: &Manifest) -> Vec<String> {
    manifest.cases().map(|c| c.case_id()).collect()
}

fn read_case(case: &CaseEntry) -> Result<(Volume, Option<LabelVolume>)> {
    let image = read_nifti(&case.image)?.volume;
    let labels = case.label.as_deref().map(read_nifti_labels).transpose()?;
    Ok((image, labels))
}

fn stage_path(output: &Path, input: &Path, fallback: &str, suffix: &str) -> PathBuf {
    let stem = nifti_stem(input).unwrap_or(fallback);
    output.join(format!("{stem}{suffix}.nii.gz"))
}

/// Images used for landmark fitting, taken through the same spatial steps
/// as `preprocess`.
fn fitting_volumes(ctx: &RunContext, manifest: &Manifest) -> Result<(Vec<Volume>, Vec<super::CaseFailure>)> {
    let entries: Vec<_> = manifest.cases().collect();
    let ids = case_ids(manifest);
    let (vols, failures) = ctx.run_cases(&ids, |i| {
        let image = read_nifti(&entries[i].case.image)?.volume;
        Ok(spatial_steps(&image, None, &ctx.config, crop_first(&ctx.config))?.image)
    })?;
    Ok((vols.into_iter().flatten().collect(), failures))
}

fn fit_model(ctx: &RunContext, volumes: &[Volume]) -> Result<LandmarkModel> {
    let s = &ctx.config.standardize;
    fit_landmarks(volumes, &s.percentiles, s.foreground)
}

/// Fits standardization landmarks on every case of `manifest` and writes
/// `landmarks.json`.
pub fn fit_histogram(ctx: &RunContext, manifest_path: &Path, output: &Path) -> Result<RunReport> {
    let mut prov = start("fit-histogram", ctx, output, &[manifest_path])?;
    let manifest = load_manifest(manifest_path, &ctx.config)?;
    let (volumes, failures) = fitting_volumes(ctx, &manifest)?;
    let mut report = RunReport {
        command: "fit-histogram".into(),
        cases_total: manifest.num_cases(),
        cases_ok: volumes.len(),
        cases_skipped: manifest.num_cases() - volumes.len() - failures.len(),
        failures,
        outputs: vec![],
    };
    if report.succeeded() || ctx.keep_going {
        let model = fit_model(ctx, &volumes)?;
        let path = output.join(LANDMARKS_FILE);
        model.save(&path)?;
        report.outputs.push(path);
        prov.details = serde_json::json!({ "fitted_on_cases": volumes.len() });
    }
    finish(output, &prov, report)
}

/// Subject-level train/validation split; writes `split.json` plus
/// `train.json` and `validation.json` manifests.
pub fn split(ctx: &RunContext, manifest_path: &Path, output: &Path) -> Result<RunReport> {
    let prov = start("split", ctx, output, &[manifest_path])?;
    let manifest = load_manifest(manifest_path, &ctx.config)?;
    let spec = split_subjects(&manifest, ctx.config.validation_fraction, ctx.seed)?;
    let paths = [
        output.join(SPLIT_FILE),
        output.join("train.json"),
        output.join("validation.json"),
    ];
    spec.save(&paths[0])?;
    manifest.restrict_to(&spec.train).save(&paths[1])?;
    manifest.restrict_to(&spec.validation).save(&paths[2])?;
    let report = RunReport {
        command: "split".into(),
        cases_total: manifest.num_cases(),
        cases_ok: manifest.num_cases(),
        cases_skipped: 0,
        failures: vec![],
        outputs: paths.to_vec(),
    };
    finish(output, &prov, report)
}

/// Runs the full preprocessing chain on every case. Landmarks come from
/// `landmarks` when given, otherwise they are fitted on the training
/// subjects of a seeded split (all subjects if the cohort is too small to
/// split). Writes `<stem>-pre.nii.gz` images (f32), `<stem>-pre.nii.gz`
/// labels, `landmarks.json` and a `manifest.json` of the outputs.
pub fn preprocess(
    ctx: &RunContext,
    manifest_path: &Path,
    output: &Path,
    landmarks: Option<&Path>,
) -> Result<RunReport> {
    let mut inputs = vec![manifest_path];
    inputs.extend(landmarks);
    let mut prov = start("preprocess", ctx, output, &inputs)?;
    let manifest = load_manifest(manifest_path, &ctx.config)?;

    let model = match landmarks {
        Some(p) => LandmarkModel::load(p)?,
        None => {
            let fit_on = match split_subjects(&manifest, ctx.config.validation_fraction, ctx.seed) {
                Ok(s) => manifest.restrict_to(&s.train),
                Err(Error::Parameter(_)) => manifest.clone(),
                Err(e) => return Err(e),
            };
            let (volumes, failures) = fitting_volumes(ctx, &fit_on)?;
            if !failures.is_empty() && !ctx.keep_going {
                let results: Vec<Option<()>> = vec![None; fit_on.num_cases()];
                let report = RunReport::from_cases("preprocess", &results, failures);
                return finish(output, &prov, report);
            }
            prov.details = serde_json::json!({ "landmarks_fitted_on": fit_on.subject_ids() });
            fit_model(ctx, &volumes)?
        }
    };
    let model_path = output.join(LANDMARKS_FILE);
    model.save(&model_path)?;

    let entries: Vec<_> = manifest.cases().collect();
    let ids = case_ids(&manifest);
    let (results, failures) = ctx.run_cases(&ids, |i| {
        let case = entries[i].case;
        let (image, labels) = read_case(case)?;
        let done = preprocess_case(&image, labels.as_ref(), &ctx.config, &model)?;
        let img_path = stage_path(output, &case.image, &ids[i], "-pre");
        write_nifti(&done.image, &img_path, DataType::F32)?;
        let label_path = match (&done.labels, &case.label) {
            (Some(l), Some(src)) => {
                let p = stage_path(output, src, &format!("{}-label", ids[i]), "-pre");
                write_nifti_labels(l, &p)?;
                Some(p)
            }
            _ => None,
        };
        Ok(CaseEntry {
            breath_intensity: case.breath_intensity,
            phase: case.phase,
            image: img_path,
            label: label_path,
        })
    })?;

    let mut out_manifest = Manifest::default();
    for (entry, result) in entries.iter().zip(&results) {
        let Some(done) = result else { continue };
        match out_manifest.subjects.last_mut() {
            Some(s) if s.id == entry.subject => s.cases.push(done.clone()),
            _ => out_manifest.subjects.push(crate::io::Subject {
                id: entry.subject.to_owned(),
                cases: vec![done.clone()],
            }),
        }
    }
    let manifest_out = output.join(MANIFEST_FILE);
    out_manifest.save(&manifest_out)?;

    let mut report = RunReport::from_cases("preprocess", &results, failures);
    for done in results.iter().flatten() {
        report.outputs.push(done.image.clone());
        report.outputs.extend(done.label.clone());
    }
    report.outputs.push(model_path);
    report.outputs.push(manifest_out);
    finish(output, &prov, report)
}

/// One augmented copy of a case, as listed in `augmented.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedCase {
    pub case_id: String,
    pub subject: String,
    pub breath_intensity: u8,
    pub phase: Phase,
    pub copy: u32,
    /// Relative to the index file's directory when possible.
    pub image: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<PathBuf>,
    pub records: PathBuf,
}

/// Applies one policy-drawn transform to every slice of every case,
/// `config.augment.copies` times. Slice seeds derive from
/// `(seed, case id, copy, slice)`. Writes `<stem>-aug<c>.nii.gz`,
/// `<stem>-aug<c>.records.json` and the `augmented.json` index.
pub fn augment(ctx: &RunContext, manifest_path: &Path, output: &Path) -> Result<RunReport> {
    let prov = start("augment", ctx, output, &[manifest_path])?;
    let manifest = load_manifest(manifest_path, &ctx.config)?;
    let policy = &ctx.config.augment.policy;
    policy.validate()?;
    let entries: Vec<_> = manifest.cases().collect();
    let ids = case_ids(&manifest);

    let (results, failures) = ctx.run_cases(&ids, |i| {
        let entry = entries[i];
        let id = &ids[i];
        let image = read_nifti(&entry.case.image)?.volume;
        let slices = extract_slices(&image, id);
        let mut written = Vec::new();
        for copy in 0..ctx.config.augment.copies {
            let mut out = Vec::with_capacity(slices.len());
            let mut records = Vec::with_capacity(slices.len());
            for (k, slice) in slices.iter().enumerate() {
                let seed = derive_slice_seed(ctx.seed, id, copy, k);
                let (aug, record) = augment_slice(slice, policy, seed)?;
                out.push(aug);
                records.push(record);
            }
            let vol = stack_slices(&out, image.grid())?;
            let img_path = stage_path(output, &entry.case.image, id, &format!("-aug{copy}"));
            write_nifti(&vol, &img_path, DataType::F32)?;
            let stem = nifti_stem(&img_path).unwrap_or(id).to_owned();
            let rec_path = output.join(format!("{stem}.records.json"));
            write_json(&rec_path, &records)?;
            written.push(AugmentedCase {
                case_id: id.clone(),
                subject: entry.subject.to_owned(),
                breath_intensity: entry.case.breath_intensity,
                phase: entry.case.phase,
                copy,
                image: relative_to(&img_path, output),
                label: entry.case.label.as_deref().map(|l| relative_to(l, output)),
                records: relative_to(&rec_path, output),
            });
        }
        Ok(written)
    })?;

    let index: Vec<AugmentedCase> = results.iter().flatten().flatten().cloned().collect();
    let index_path = output.join(AUGMENTED_FILE);
    write_json(&index_path, &index)?;
    let mut report = RunReport::from_cases("augment", &results, failures);
    for a in &index {
        report.outputs.push(output.join(&a.image));
        report.outputs.push(output.join(&a.records));
    }
    report.outputs.push(index_path);
    finish(output, &prov, report)
}

/// Scores predictions against the manifest's labels. Predictions are found
/// in `predictions` with the configured naming pattern; a `-label` file is
/// preferred over a plain one. Writes `metrics.csv`, `summary.json` and
/// `table.txt`.
pub fn evaluate(ctx: &RunContext, manifest_path: &Path, predictions: &Path, output: &Path) -> Result<RunReport> {
    let prov = start("evaluate", ctx, output, &[manifest_path, predictions])?;
    let manifest = load_manifest(manifest_path, &ctx.config)?;
    let pattern = NamingPattern::new(&ctx.config.naming_pattern)?;
    let preds = build_manifest(predictions, &pattern)?.manifest;
    let pred_for = |subject: &str, case: &CaseEntry| -> Option<PathBuf> {
        let s = preds.subjects.iter().find(|s| s.id == subject)?;
        let c = s
            .cases
            .iter()
            .find(|c| c.breath_intensity == case.breath_intensity && c.phase == case.phase)?;
        Some(c.label.clone().unwrap_or_else(|| c.image.clone()))
    };

    let entries: Vec<_> = manifest.cases().collect();
    let ids = case_ids(&manifest);
    let (results, failures) = ctx.run_cases(&ids, |i| {
        let entry = entries[i];
        let gt_path = entry
            .case
            .label
            .as_deref()
            .ok_or_else(|| Error::Manifest(format!("case {} has no ground-truth label", ids[i])))?;
        let pred_path = pred_for(entry.subject, entry.case).ok_or_else(|| {
            Error::Manifest(format!(
                "no prediction for case {} in {}",
                ids[i],
                predictions.display()
            ))
        })?;
        let gt = read_nifti_labels(gt_path)?;
        let pred = read_nifti_labels(&pred_path)?;
        evaluate_case(&ids[i], &pred, &gt, &ctx.config.labels)
    })?;

    let reports: Vec<MetricsReport> = results.iter().flatten().cloned().collect();
    let mut report = RunReport::from_cases("evaluate", &results, failures);
    let csv_path = output.join("metrics.csv");
    write_metrics_csv(&csv_path, &reports)?;
    report.outputs.push(csv_path);
    if !reports.is_empty() {
        let summary = aggregate(&reports)?;
        let summary_path = output.join("summary.json");
        write_json(&summary_path, &summary)?;
        let table_path = output.join("table.txt");
        let name = nifti_stem(predictions)
            .map(str::to_owned)
            .or_else(|| predictions.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "predictions".into());
        let table = crate::metrics::CohortSummary::table(&[(&name, &summary)]);
        std::fs::write(&table_path, table).map_err(|e| Error::io(&table_path, e))?;
        report.outputs.push(summary_path);
        report.outputs.push(table_path);
    }
    finish(output, &prov, report)
}

/// Writes `<case id>-k<slice>-preview.png` montages (original, then one
/// panel per transform kind) for the first `max_cases` cases, using the
/// middle slice unless `slice` is given.
pub fn preview(
    ctx: &RunContext,
    manifest_path: &Path,
    output: &Path,
    max_cases: usize,
    slice: Option<usize>,
) -> Result<RunReport> {
    let prov = start("preview", ctx, output, &[manifest_path])?;
    let manifest = load_manifest(manifest_path, &ctx.config)?;
    let entries: Vec<_> = manifest.cases().take(max_cases).collect();
    let ids: Vec<String> = entries.iter().map(|c| c.case_id()).collect();
    let (results, failures) = ctx.run_cases(&ids, |i| {
        let image = read_nifti(&entries[i].case.image)?.volume;
        let nz = image.shape()[2];
        let k = slice.unwrap_or(nz / 2);
        if k >= nz {
            return Err(Error::Parameter(format!("slice {k} out of range for {nz} slices")));
        }
        let src = extract_slices(&image, &ids[i]).swap_remove(k);
        let seed = derive_slice_seed(ctx.seed, &ids[i], 0, k);
        let p = panels::transform_panels(&src, &ctx.config.augment.policy, seed)?;
        let path = output.join(format!("{}-k{k}-preview.png", ids[i]));
        panels::montage(&p)?
            .save(&path)
            .map_err(|e| Error::format(&path, e.to_string()))?;
        Ok(path)
    })?;
    let mut report = RunReport::from_cases("preview", &results, failures);
    report.outputs.extend(results.into_iter().flatten());
    finish(output, &prov, report)
}
