//! Per-structure Dice and 95th-percentile Hausdorff distance.

mod report;
mod surface;

pub use report::{
    aggregate, evaluate_case, read_metrics_csv, write_metrics_csv, CohortSummary, MetricsReport, MetricsRow,
    StructureMetrics, StructureSummary,
};
pub use surface::{
    directed_surface_distances, squared_distance_transform, surface_mask, surface_voxels, SurfacePointSet,
};

use crate::error::{Error, Result};
use crate::standardize::percentile_sorted;
use crate::volume::LabelVolume;

fn check_same_shape(pred: &LabelVolume, gt: &LabelVolume) -> Result<()> {
    if pred.shape() != gt.shape() {
        return Err(Error::Geometry(format!(
            "prediction shape {:?} does not match ground truth {:?}",
            pred.shape(),
            gt.shape()
        )));
    }
    Ok(())
}

pub fn binary_mask(vol: &LabelVolume, label: u16) -> Vec<bool> {
    vol.data().iter().map(|&v| v == label).collect()
}

/// `2|A n B| / (|A| + |B|)`; two empty masks score 1.
pub fn dice_masks(a: &[bool], b: &[bool]) -> f64 {
    let (mut inter, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        na += x as usize;
        nb += y as usize;
        inter += (x && y) as usize;
    }
    if na + nb == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (na + nb) as f64
    }
}

pub fn dice(pred: &LabelVolume, gt: &LabelVolume, label: u16) -> Result<f64> {
    check_same_shape(pred, gt)?;
    Ok(dice_masks(&binary_mask(pred, label), &binary_mask(gt, label)))
}

/// Symmetric surface distance at percentile `q` (95 for HD95, 100 for the
/// classic Hausdorff distance). `None` when either mask is empty.
pub fn surface_distance_percentile(
    a: &[bool],
    b: &[bool],
    shape: [usize; 3],
    spacing: [f64; 3],
    q: f64,
) -> Option<f64> {
    let mut ab = directed_surface_distances(a, b, shape, spacing);
    let mut ba = directed_surface_distances(b, a, shape, spacing);
    if ab.is_empty() || ba.is_empty() {
        return None;
    }
    ab.sort_unstable_by(f64::total_cmp);
    ba.sort_unstable_by(f64::total_cmp);
    Some(percentile_sorted(&ab, q).max(percentile_sorted(&ba, q)))
}

/// 95th-percentile symmetric surface distance in mm, or `None` when either
/// mask is empty for `label`.
pub fn hd95(pred: &LabelVolume, gt: &LabelVolume, label: u16, spacing: [f64; 3]) -> Result<Option<f64>> {
    check_same_shape(pred, gt)?;
    if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::Parameter(format!("spacing must be positive: {spacing:?}")));
    }
    Ok(surface_distance_percentile(
        &binary_mask(pred, label),
        &binary_mask(gt, label),
        pred.shape(),
        spacing,
        95.0,
    ))
}
