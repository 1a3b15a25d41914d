//! Synthetic short-axis cardiac phantoms: an LV blood pool inside a
//! myocardial ring with a crescent-shaped RV beside it, on a noisy
//! background. Raw phantoms are stored LPS-like (first two axes flipped)
//! so preprocessing has real reorientation work to do.

use std::path::{Path, PathBuf};

use nalgebra::Matrix4;
use rand::Rng;

use crate::error::{Error, Result};
use crate::io::manifest::{case_id, Phase};
use crate::io::{write_nifti, write_nifti_labels, DataType};
use crate::labels::LabelMap;
use crate::seed::{derive_slice_seed, rng_from_seed};
use crate::volume::{Grid, LabelVolume, Volume};

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub shape: [usize; 3],
    pub spacing: [f64; 3],
    pub seed: u64,
    /// Half-width of uniform additive noise.
    pub noise: f64,
    pub labels: LabelMap,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            shape: [192, 192, 10],
            spacing: [1.5, 1.5, 8.0],
            seed: 0,
            noise: 10.0,
            labels: LabelMap::default(),
        }
    }
}

/// One phantom case: raw image and matching labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomCase {
    pub case_id: String,
    pub image: Volume,
    pub labels: LabelVolume,
}

/// Raw-scanner style affine: axes 0 and 1 point left/posterior.
pub fn lps_affine(shape: [usize; 3], spacing: [f64; 3]) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m[(0, 0)] = -spacing[0];
    m[(1, 1)] = -spacing[1];
    m[(2, 2)] = spacing[2];
    m[(0, 3)] = spacing[0] * (shape[0] as f64 - 1.0) / 2.0;
    m[(1, 3)] = spacing[1] * (shape[1] as f64 - 1.0) / 2.0;
    m[(2, 3)] = -spacing[2] * (shape[2] as f64 - 1.0) / 2.0;
    m
}

pub fn make_case(spec: &PhantomSpec, subject: &str, intensity: u8, phase: Phase) -> Result<PhantomCase> {
    let [nx, ny, nz] = spec.shape;
    let [sx, sy, _] = spec.spacing;
    // LV radius 25 mm, ring 10 mm, RV reaching 30 mm beyond: needs ~140 mm
    let fov = (nx as f64 * sx).min(ny as f64 * sy);
    if fov < 140.0 {
        return Err(Error::Parameter(format!(
            "phantom field of view {fov} mm is below 140 mm"
        )));
    }
    let id = case_id(subject, intensity, phase);
    let mut rng = rng_from_seed(derive_slice_seed(spec.seed, &id, 0, 0));
    let subject_rng_seed = derive_slice_seed(spec.seed, subject, 0, 0);
    let mut srng = rng_from_seed(subject_rng_seed);

    let lv_r = srng.random_range(20.0..26.0) * if phase == Phase::Es { 0.75 } else { 1.0 };
    let wall = srng.random_range(7.0..10.0);
    let rv_offset = srng.random_range(28.0..34.0);
    let center = [srng.random_range(-8.0..8.0), srng.random_range(-8.0..8.0)];
    // breathing shifts the heart a little between slices
    let breath = 1.5 * (intensity as f64 - 1.0);
    let gains = [srng.random_range(0.8..1.2), rng.random_range(0.9..1.1)];

    let grid = Grid::new(spec.shape, lps_affine(spec.shape, spec.spacing))?;
    let mut image = Vec::with_capacity(grid.len());
    let mut labels = Vec::with_capacity(grid.len());
    for k in 0..nz {
        let shift = breath * ((k as f64) * 1.3).sin();
        let taper = 1.0 - 0.4 * (k as f64 / nz.max(2) as f64 - 0.5).abs();
        for j in 0..ny {
            for i in 0..nx {
                let x = (i as f64 - (nx as f64 - 1.0) / 2.0) * sx - center[0] - shift;
                let y = (j as f64 - (ny as f64 - 1.0) / 2.0) * sy - center[1];
                let r = (x * x + y * y).sqrt();
                let (rx, ry) = (x + rv_offset, y * 0.8);
                let rv_r = (rx * rx + ry * ry).sqrt();
                let (code, base) = if r < lv_r * taper {
                    (spec.labels.lv, 220.0)
                } else if r < (lv_r + wall) * taper {
                    (spec.labels.myo, 90.0)
                } else if rv_r < 0.9 * lv_r * taper + 6.0 {
                    (spec.labels.rv, 190.0)
                } else {
                    (0, 40.0 + 0.2 * (x + y).abs().min(100.0))
                };
                labels.push(code);
                let v = base * gains[0] * gains[1] + rng.random_range(-spec.noise..=spec.noise);
                image.push(v.max(0.0).round());
            }
        }
    }
    Ok(PhantomCase {
        case_id: id,
        image: Volume::new(grid.clone(), image)?,
        labels: Volume::new(grid, labels)?,
    })
}

/// Writes `<subject>-<intensity>-<phase>.nii.gz` images (i16) and
/// `-label.nii.gz` maps for every subject, grade and phase.
pub fn write_cohort(dir: &Path, spec: &PhantomSpec, subjects: usize, intensities: &[u8]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for s in 0..subjects {
        let subject = format!("P{:03}", s + 1);
        for &intensity in intensities {
            for phase in [Phase::Ed, Phase::Es] {
                let case = make_case(spec, &subject, intensity, phase)?;
                let img = dir.join(format!("{}.nii.gz", case.case_id));
                let lab = dir.join(format!("{}-label.nii.gz", case.case_id));
                write_nifti(&case.image, &img, DataType::I16)?;
                write_nifti_labels(&case.labels, &lab)?;
                written.push(img);
                written.push(lab);
            }
        }
    }
    Ok(written)
}
