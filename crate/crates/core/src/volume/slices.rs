use serde::{Deserialize, Serialize};

use super::{Grid, Volume};
use crate::error::{Error, Result};

/// Where a slice came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SliceSource {
    pub case_id: String,
    pub slice: usize,
}

/// One short-axis slice. `data[i + nx * j]` holds pixel `(i, j)`; axis 0 and
/// axis 1 are the first two volume axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice2D {
    shape: [usize; 2],
    spacing: [f64; 2],
    data: Vec<f64>,
    source: SliceSource,
}

impl Slice2D {
    pub fn new(shape: [usize; 2], spacing: [f64; 2], data: Vec<f64>, source: SliceSource) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Geometry(format!("slice shape {shape:?} is empty")));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Geometry(format!("slice spacing {spacing:?} must be positive")));
        }
        if data.len() != shape[0] * shape[1] {
            return Err(Error::Geometry(format!(
                "slice data length {} does not match shape {shape:?}",
                data.len()
            )));
        }
        Ok(Self {
            shape,
            spacing,
            data,
            source,
        })
    }

    /// Unit-spacing slice with an anonymous source, mostly for tests.
    pub fn from_fn(shape: [usize; 2], f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(shape[0] * shape[1]);
        for j in 0..shape[1] {
            for i in 0..shape[0] {
                data.push(f(i, j));
            }
        }
        Self::new(shape, [1.0, 1.0], data, SliceSource::default())
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn source(&self) -> &SliceSource {
        &self.source
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i + self.shape[0] * j]
    }

    /// Same geometry and provenance with new pixel values.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.shape, self.spacing, data, self.source.clone())
    }

    pub fn with_source(mut self, source: SliceSource) -> Self {
        self.source = source;
        self
    }
}

/// Splits a volume into its `nz` slices along the third axis.
pub fn extract_slices(vol: &Volume, case_id: &str) -> Vec<Slice2D> {
    let [nx, ny, _] = vol.shape();
    let sp = vol.spacing();
    vol.data()
        .chunks_exact(nx * ny)
        .enumerate()
        .map(|(k, chunk)| Slice2D {
            shape: [nx, ny],
            spacing: [sp[0], sp[1]],
            data: chunk.to_vec(),
            source: SliceSource {
                case_id: case_id.to_owned(),
                slice: k,
            },
        })
        .collect()
}

/// Stacks slices (in the given order) back onto `grid`.
pub fn stack_slices(slices: &[Slice2D], grid: &Grid) -> Result<Volume> {
    let [nx, ny, nz] = grid.shape();
    if slices.len() != nz {
        return Err(Error::Geometry(format!("expected {nz} slices, got {}", slices.len())));
    }
    let mut data = Vec::with_capacity(grid.len());
    for s in slices {
        if s.shape != [nx, ny] {
            return Err(Error::Geometry(format!(
                "slice shape {:?} does not match grid {:?}",
                s.shape,
                [nx, ny]
            )));
        }
        data.extend_from_slice(&s.data);
    }
    Volume::new(grid.clone(), data)
}
