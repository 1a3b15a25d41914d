//! 3-D volumes with an index-to-world affine, and the geometric operations
//! applied before augmentation: canonical reorientation, spacing resampling,
//! in-plane crop/pad and slice extraction.
//!
//! Voxel data is stored with the first axis varying fastest (the NIfTI
//! on-disk order), so slice `k` is the contiguous block
//! `data[k * nx * ny..(k + 1) * nx * ny]`.

mod crop;
mod reorient;
mod resample;
mod slices;

use std::fmt::Debug;

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};

pub use crop::{center_crop_or_pad, crop_or_pad_around, mask_centroid, restore_crop, CropWindow};
pub use reorient::{canonical_orientation, reorient_to_canonical, Orientation};
pub use resample::{resample, Interpolation};
pub use slices::{extract_slices, stack_slices, Slice2D, SliceSource};

/// Scalar stored in a [`Volume`].
pub trait Voxel: Copy + PartialEq + Debug + Send + Sync + 'static {
    /// Whether linear interpolation is meaningful for this type.
    const LINEAR: bool;

    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Voxel for f64 {
    const LINEAR: bool = true;

    fn to_f64(self) -> f64 {
        self
    }

    fn from_f64(v: f64) -> Self {
        v
    }
}

impl Voxel for u16 {
    const LINEAR: bool = false;

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn from_f64(v: f64) -> Self {
        v.round().clamp(0.0, u16::MAX as f64) as u16
    }
}

/// Shape plus voxel-index to world-mm affine.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    shape: [usize; 3],
    affine: Matrix4<f64>,
}

impl Grid {
    pub fn new(shape: [usize; 3], affine: Matrix4<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Geometry(format!("shape {shape:?} has a zero extent")));
        }
        if affine.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("affine has non-finite entries".into()));
        }
        if affine.row(3) != nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0) {
            return Err(Error::Geometry("affine bottom row must be (0, 0, 0, 1)".into()));
        }
        let norms = column_norms(&affine);
        if norms.contains(&0.0) {
            return Err(Error::Geometry("affine has a zero-length axis".into()));
        }
        let det = affine.fixed_view::<3, 3>(0, 0).determinant();
        if det.abs() <= 1e-12 * norms.iter().product::<f64>() {
            return Err(Error::Geometry("affine is not invertible".into()));
        }
        Ok(Self { shape, affine })
    }

    /// Axis-aligned grid with the given spacing and origin (world position
    /// of voxel (0, 0, 0)).
    pub fn with_spacing(shape: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        let mut affine = Matrix4::identity();
        for a in 0..3 {
            affine[(a, a)] = spacing[a];
            affine[(a, 3)] = origin[a];
        }
        Self::new(shape, affine)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn affine(&self) -> &Matrix4<f64> {
        &self.affine
    }

    pub fn spacing(&self) -> [f64; 3] {
        column_norms(&self.affine)
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    /// World coordinate (mm) of a possibly fractional voxel index.
    pub fn world(&self, index: [f64; 3]) -> [f64; 3] {
        let p = self.affine * Vector4::new(index[0], index[1], index[2], 1.0);
        [p[0], p[1], p[2]]
    }
}

pub(crate) fn column_norms(affine: &Matrix4<f64>) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (a, n) in out.iter_mut().enumerate() {
        *n = affine.fixed_view::<3, 1>(0, a).norm();
    }
    out
}

/// A 3-D scalar grid with geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T = f64> {
    grid: Grid,
    data: Vec<T>,
}

/// Integer label map (0 = background).
pub type LabelVolume = Volume<u16>;

impl<T: Voxel> Volume<T> {
    pub fn new(grid: Grid, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Geometry(format!(
                "data length {} does not match shape {:?}",
                data.len(),
                grid.shape
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn filled(grid: Grid, value: T) -> Self {
        let data = vec![value; grid.len()];
        Self { grid, data }
    }

    /// Builds a volume by evaluating `f(i, j, k)` at every voxel.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let [nx, ny, nz] = grid.shape;
        let mut data = Vec::with_capacity(grid.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> [usize; 3] {
        self.grid.shape
    }

    pub fn affine(&self) -> &Matrix4<f64> {
        &self.grid.affine
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.grid.spacing()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.grid.linear_index(i, j, k)]
    }

    /// Same geometry, new values.
    pub fn with_data<U: Voxel>(&self, data: Vec<U>) -> Result<Volume<U>> {
        Volume::new(self.grid.clone(), data)
    }

    pub fn map<U: Voxel>(&self, f: impl Fn(T) -> U) -> Volume<U> {
        Volume {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl LabelVolume {
    /// Fails if any voxel holds a code that is neither background nor in `codes`.
    pub fn check_codes(&self, codes: &[u16]) -> Result<()> {
        if let Some(bad) = self.data.iter().find(|&&v| v != 0 && !codes.contains(&v)) {
            return Err(Error::Config(format!(
                "label code {bad} is not in the label map {codes:?}"
            )));
        }
        Ok(())
    }

    /// Sorted set of distinct codes present.
    pub fn codes(&self) -> Vec<u16> {
        let mut seen = std::collections::BTreeSet::new();
        seen.extend(self.data.iter().copied());
        seen.into_iter().collect()
    }
}
