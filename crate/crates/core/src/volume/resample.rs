use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::{column_norms, Grid, Volume, Voxel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    Trilinear,
    Nearest,
}

/// Per-axis sample positions in input index space.
struct AxisTaps {
    lo: Vec<usize>,
    hi: Vec<usize>,
    frac: Vec<f64>,
    nearest: Vec<usize>,
}

impl AxisTaps {
    fn new(n_out: usize, n_in: usize, ratio: f64) -> Self {
        let last = (n_in - 1) as f64;
        let mut taps = AxisTaps {
            lo: Vec::with_capacity(n_out),
            hi: Vec::with_capacity(n_out),
            frac: Vec::with_capacity(n_out),
            nearest: Vec::with_capacity(n_out),
        };
        for o in 0..n_out {
            // clamp-to-edge
            let x = (o as f64 * ratio).clamp(0.0, last);
            let lo = x.floor() as usize;
            taps.lo.push(lo);
            taps.hi.push((lo + 1).min(n_in - 1));
            taps.frac.push(x - lo as f64);
            taps.nearest.push(((x + 0.5).floor() as usize).min(n_in - 1));
        }
        taps
    }
}

/// Resamples onto a grid with `target_spacing`, keeping the world position
/// of voxel (0, 0, 0) and the axis directions. The extent along each axis is
/// `round(n * spacing / target)`, so the field of view changes by less than
/// one output voxel.
///
/// Label volumes only accept [`Interpolation::Nearest`].
pub fn resample<T: Voxel>(vol: &Volume<T>, target_spacing: [f64; 3], interp: Interpolation) -> Result<Volume<T>> {
    if target_spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::Parameter(format!(
            "target spacing must be positive, got {target_spacing:?}"
        )));
    }
    if interp == Interpolation::Trilinear && !T::LINEAR {
        return Err(Error::Usage(
            "trilinear interpolation is not allowed on label volumes".into(),
        ));
    }
    let in_shape = vol.shape();
    let spacing = column_norms(vol.affine());

    let mut out_shape = [0usize; 3];
    let mut ratio = [0.0; 3];
    let mut affine = Matrix4::identity();
    for a in 0..3 {
        out_shape[a] = ((in_shape[a] as f64 * spacing[a] / target_spacing[a]).round() as usize).max(1);
        ratio[a] = target_spacing[a] / spacing[a];
        for r in 0..3 {
            affine[(r, a)] = vol.affine()[(r, a)] / spacing[a] * target_spacing[a];
        }
    }
    for r in 0..3 {
        affine[(r, 3)] = vol.affine()[(r, 3)];
    }
    let grid = Grid::new(out_shape, affine)?;

    let taps: Vec<AxisTaps> = (0..3)
        .map(|a| AxisTaps::new(out_shape[a], in_shape[a], ratio[a]))
        .collect();
    let src = vol.data();
    let (sx, sxy) = (in_shape[0], in_shape[0] * in_shape[1]);
    let mut data = Vec::with_capacity(grid.len());

    match interp {
        Interpolation::Nearest => {
            for k in 0..out_shape[2] {
                let zk = taps[2].nearest[k] * sxy;
                for j in 0..out_shape[1] {
                    let yj = zk + taps[1].nearest[j] * sx;
                    for i in 0..out_shape[0] {
                        data.push(src[yj + taps[0].nearest[i]]);
                    }
                }
            }
        }
        Interpolation::Trilinear => {
            let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
            for k in 0..out_shape[2] {
                let (z0, z1, tz) = (taps[2].lo[k] * sxy, taps[2].hi[k] * sxy, taps[2].frac[k]);
                for j in 0..out_shape[1] {
                    let (y0, y1, ty) = (taps[1].lo[j] * sx, taps[1].hi[j] * sx, taps[1].frac[j]);
                    for i in 0..out_shape[0] {
                        let (x0, x1, tx) = (taps[0].lo[i], taps[0].hi[i], taps[0].frac[i]);
                        let v = |z: usize, y: usize, x: usize| src[z + y + x].to_f64();
                        let c00 = lerp(v(z0, y0, x0), v(z0, y0, x1), tx);
                        let c10 = lerp(v(z0, y1, x0), v(z0, y1, x1), tx);
                        let c01 = lerp(v(z1, y0, x0), v(z1, y0, x1), tx);
                        let c11 = lerp(v(z1, y1, x0), v(z1, y1, x1), tx);
                        let c0 = lerp(c00, c10, ty);
                        let c1 = lerp(c01, c11, ty);
                        data.push(T::from_f64(lerp(c0, c1, tz)));
                    }
                }
            }
        }
    }
    Volume::new(grid, data)
}
