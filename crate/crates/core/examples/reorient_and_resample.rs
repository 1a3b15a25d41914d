//! Brings an LPS-stored volume to RAS+ orientation, resamples it to
//! 1.25 mm in-plane and center-crops it, checking that world coordinates
//! survive each step.

use cmr_pipeline::phantom::lps_affine;
use cmr_pipeline::volume::{
    canonical_orientation, center_crop_or_pad, reorient_to_canonical, resample, restore_crop, Interpolation,
};
use cmr_pipeline::{Grid, Volume};

pub fn run_example() -> anyhow::Result<()> {
    let shape = [40, 32, 4];
    let grid = Grid::new(shape, lps_affine(shape, [1.5, 1.5, 8.0]))?;
    let raw = Volume::from_fn(grid, |i, j, k| (2 * i + 3 * j + k) as f64);
    println!("raw orientation: {:?}", canonical_orientation(raw.affine())?);

    let ras = reorient_to_canonical(&raw)?;
    // voxel (0,0,0) of the RAS volume sits where raw voxel (39,31,0) was
    let w_ras = ras.grid().world([0.0, 0.0, 0.0]);
    let w_raw = raw.grid().world([39.0, 31.0, 0.0]);
    assert!(w_ras.iter().zip(&w_raw).all(|(a, b)| (a - b).abs() < 1e-9));
    assert_eq!(ras.get(0, 0, 0), raw.get(39, 31, 0));
    println!(
        "RAS affine diagonal: {:?}",
        [ras.affine()[(0, 0)], ras.affine()[(1, 1)], ras.affine()[(2, 2)]]
    );

    let fine = resample(&ras, [1.25, 1.25, 8.0], Interpolation::Trilinear)?;
    println!(
        "resampled {:?} -> {:?} at {:?} mm",
        ras.shape(),
        fine.shape(),
        fine.spacing()
    );

    let (cropped, window) = center_crop_or_pad(&fine, [40, 40], 0.0)?;
    println!("crop window: {window:?}");
    let back = restore_crop(&cropped, &window, 0.0)?;
    assert_eq!(back.shape(), fine.shape());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
