#[allow(dead_code)]
#[path = "../examples/artifact_gallery.rs"]
mod artifact_gallery;
#[allow(dead_code)]
#[path = "../examples/cohort_manifest_split.rs"]
mod cohort_manifest_split;
#[allow(dead_code)]
#[path = "../examples/full_pipeline.rs"]
mod full_pipeline;
#[allow(dead_code)]
#[path = "../examples/histogram_standardization.rs"]
mod histogram_standardization;
#[allow(dead_code)]
#[path = "../examples/reorient_and_resample.rs"]
mod reorient_and_resample;
#[allow(dead_code)]
#[path = "../examples/segmentation_metrics.rs"]
mod segmentation_metrics;

#[test]
fn reorient_and_resample_runs() {
    reorient_and_resample::run_example().expect("reorient example should run");
}

#[test]
fn histogram_standardization_runs() {
    histogram_standardization::run_example().expect("standardization example should run");
}

#[test]
fn artifact_gallery_runs() {
    artifact_gallery::run_example().expect("artifact example should run");
}

#[test]
fn segmentation_metrics_runs() {
    segmentation_metrics::run_example().expect("metrics example should run");
}

#[test]
fn cohort_manifest_split_runs() {
    cohort_manifest_split::run_example().expect("manifest example should run");
}

#[test]
fn full_pipeline_runs() {
    full_pipeline::run_example().expect("pipeline example should run");
}
