use nalgebra::Matrix4;

use super::{Grid, Volume, Voxel};
use crate::error::{Error, Result};

/// How input voxel axes map onto RAS+ output axes.
///
/// Output axis `w` reads input axis `source_axis[w]`, reversed when
/// `flipped[w]` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Orientation {
    pub source_axis: [usize; 3],
    pub flipped: [bool; 3],
}

impl Orientation {
    pub fn is_identity(&self) -> bool {
        self.source_axis == [0, 1, 2] && self.flipped == [false; 3]
    }
}

/// Works out the axis permutation and flips that bring `affine` to RAS+.
///
/// Every voxel axis must have a single dominant world axis, and no two voxel
/// axes may share one.
pub fn canonical_orientation(affine: &Matrix4<f64>) -> Result<Orientation> {
    let mut source_axis = [usize::MAX; 3];
    let mut flipped = [false; 3];
    for a in 0..3 {
        let col = [affine[(0, a)], affine[(1, a)], affine[(2, a)]];
        let mut order = [0usize, 1, 2];
        order.sort_by(|&x, &y| col[y].abs().total_cmp(&col[x].abs()));
        let (best, second) = (col[order[0]].abs(), col[order[1]].abs());
        if best - second <= 1e-9 * best {
            return Err(Error::Dominance(format!(
                "voxel axis {a} has no dominant world axis (column {col:?})"
            )));
        }
        let w = order[0];
        if source_axis[w] != usize::MAX {
            return Err(Error::Dominance(format!(
                "voxel axes {} and {a} both map to world axis {w}",
                source_axis[w]
            )));
        }
        source_axis[w] = a;
        flipped[w] = col[w] < 0.0;
    }
    Ok(Orientation { source_axis, flipped })
}

/// Permutes and flips voxel axes so the affine's 3x3 part has a positive
/// dominant diagonal. Voxel values are only moved, never interpolated.
pub fn reorient_to_canonical<T: Voxel>(vol: &Volume<T>) -> Result<Volume<T>> {
    let orient = canonical_orientation(vol.affine())?;
    if orient.is_identity() {
        return Ok(vol.clone());
    }
    let in_shape = vol.shape();
    let out_shape = [
        in_shape[orient.source_axis[0]],
        in_shape[orient.source_axis[1]],
        in_shape[orient.source_axis[2]],
    ];

    // old_index = M * new_index + offset
    let mut m = Matrix4::zeros();
    m[(3, 3)] = 1.0;
    for w in 0..3 {
        let a = orient.source_axis[w];
        if orient.flipped[w] {
            m[(a, w)] = -1.0;
            m[(a, 3)] = (in_shape[a] - 1) as f64;
        } else {
            m[(a, w)] = 1.0;
        }
    }
    let grid = Grid::new(out_shape, vol.affine() * m)?;

    // Input strides along each source axis, pre-signed for flips.
    let in_stride = [1, in_shape[0], in_shape[0] * in_shape[1]];
    let mut start = 0isize;
    let mut step = [0isize; 3];
    for (w, st) in step.iter_mut().enumerate() {
        let a = orient.source_axis[w];
        let s = in_stride[a] as isize;
        if orient.flipped[w] {
            start += s * (in_shape[a] as isize - 1);
            *st = -s;
        } else {
            *st = s;
        }
    }

    let src = vol.data();
    let mut data = Vec::with_capacity(src.len());
    for k in 0..out_shape[2] as isize {
        for j in 0..out_shape[1] as isize {
            let base = start + j * step[1] + k * step[2];
            for i in 0..out_shape[0] as isize {
                data.push(src[(base + i * step[0]) as usize]);
            }
        }
    }
    Volume::new(grid, data)
}
