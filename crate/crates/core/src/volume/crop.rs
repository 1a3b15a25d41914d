use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use super::{Grid, LabelVolume, Volume, Voxel};
use crate::error::{Error, Result};

/// Record of an in-plane crop/pad: output voxel `(i, j, k)` came from input
/// voxel `(i + offset[0], j + offset[1], k)`. Negative offsets mean padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropWindow {
    pub input_shape: [usize; 2],
    pub output_shape: [usize; 2],
    pub offset: [i64; 2],
}

/// Centers the in-plane field of view on a `target` (nx, ny) window.
pub fn center_crop_or_pad<T: Voxel>(
    vol: &Volume<T>,
    target: [usize; 2],
    pad_value: T,
) -> Result<(Volume<T>, CropWindow)> {
    let [nx, ny, _] = vol.shape();
    let offset = [
        (nx as i64 - target[0] as i64).div_euclid(2),
        (ny as i64 - target[1] as i64).div_euclid(2),
    ];
    crop_with_offset(vol, target, offset, pad_value)
}

/// Crop/pad so that the in-plane index `center` lands in the middle of the window.
pub fn crop_or_pad_around<T: Voxel>(
    vol: &Volume<T>,
    center: [f64; 2],
    target: [usize; 2],
    pad_value: T,
) -> Result<(Volume<T>, CropWindow)> {
    let offset = [
        (center[0] + 0.5).floor() as i64 - (target[0] / 2) as i64,
        (center[1] + 0.5).floor() as i64 - (target[1] / 2) as i64,
    ];
    crop_with_offset(vol, target, offset, pad_value)
}

/// Voxel-index centroid of all nonzero labels, or `None` for an empty mask.
pub fn mask_centroid(labels: &LabelVolume) -> Option<[f64; 3]> {
    let [nx, ny, _] = labels.shape();
    let mut sum = [0.0; 3];
    let mut count = 0usize;
    for (idx, &v) in labels.data().iter().enumerate() {
        if v != 0 {
            sum[0] += (idx % nx) as f64;
            sum[1] += ((idx / nx) % ny) as f64;
            sum[2] += (idx / (nx * ny)) as f64;
            count += 1;
        }
    }
    (count > 0).then(|| sum.map(|s| s / count as f64))
}

/// Inverse of a crop: places `vol` back into the window's input shape.
/// Voxels that were never inside the window get `pad_value`.
pub fn restore_crop<T: Voxel>(vol: &Volume<T>, window: &CropWindow, pad_value: T) -> Result<Volume<T>> {
    let [nx, ny, _] = vol.shape();
    if [nx, ny] != window.output_shape {
        return Err(Error::Geometry(format!(
            "volume in-plane shape {:?} does not match crop window output {:?}",
            [nx, ny],
            window.output_shape
        )));
    }
    let inverse = [-window.offset[0], -window.offset[1]];
    crop_with_offset(vol, window.input_shape, inverse, pad_value).map(|(v, _)| v)
}

fn crop_with_offset<T: Voxel>(
    vol: &Volume<T>,
    target: [usize; 2],
    offset: [i64; 2],
    pad_value: T,
) -> Result<(Volume<T>, CropWindow)> {
    if target.contains(&0) {
        return Err(Error::Parameter(format!("crop target {target:?} must be positive")));
    }
    let [nx, ny, nz] = vol.shape();
    let window = CropWindow {
        input_shape: [nx, ny],
        output_shape: target,
        offset,
    };
    if target == [nx, ny] && offset == [0, 0] {
        return Ok((vol.clone(), window));
    }

    let mut affine = *vol.affine();
    let shifted = affine * Vector4::new(offset[0] as f64, offset[1] as f64, 0.0, 1.0);
    for r in 0..3 {
        affine[(r, 3)] = shifted[r];
    }
    let grid = Grid::new([target[0], target[1], nz], affine)?;

    let src = vol.data();
    let mut data = vec![pad_value; grid.len()];
    // Output i-range whose source column exists.
    let i_lo = (-offset[0]).clamp(0, target[0] as i64) as usize;
    let i_hi = (nx as i64 - offset[0]).clamp(0, target[0] as i64) as usize;
    for k in 0..nz {
        for j in 0..target[1] {
            let sj = j as i64 + offset[1];
            if sj < 0 || sj >= ny as i64 || i_lo >= i_hi {
                continue;
            }
            let dst = (k * target[1] + j) * target[0];
            let srow = (k * ny + sj as usize) * nx;
            let s0 = (i_lo as i64 + offset[0]) as usize;
            data[dst + i_lo..dst + i_hi].copy_from_slice(&src[srow + s0..srow + s0 + (i_hi - i_lo)]);
        }
    }
    Ok((Volume::new(grid, data)?, window))
}
