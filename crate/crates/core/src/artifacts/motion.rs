//! Rigid-motion artifact by k-space segment composition.
//!
//! The slice is copied once per rigid transform. Phase-encode lines of
//! k-space are split at the acquisition time breakpoints and each
//! contiguous segment is filled from the spectrum of one copy. The
//! untransformed slice always supplies the segment holding the k-space
//! center.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::fft::{fft2_centered, ifft2_centered, Kspace2D};
use crate::error::{Error, Result};
use crate::volume::Slice2D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// In-plane rotation per transform, degrees.
    pub rotations_deg: Vec<f64>,
    /// Translation per transform, mm along (axis 0, axis 1).
    pub translations_mm: Vec<[f64; 2]>,
    /// Acquisition times in (0, 1), strictly increasing.
    pub times: Vec<f64>,
    /// Phase-encode axis.
    pub axis: usize,
}

impl MotionParams {
    pub fn none(axis: usize) -> Self {
        Self {
            rotations_deg: Vec::new(),
            translations_mm: Vec::new(),
            times: Vec::new(),
            axis,
        }
    }

    pub fn num_transforms(&self) -> usize {
        self.times.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.rotations_deg.len() != n || self.translations_mm.len() != n {
            return Err(Error::Parameter(format!(
                "motion lists disagree: {} rotations, {} translations, {} times",
                self.rotations_deg.len(),
                self.translations_mm.len(),
                n
            )));
        }
        if self.axis > 1 {
            return Err(Error::Parameter(format!(
                "phase-encode axis {} is not 0 or 1",
                self.axis
            )));
        }
        if self.times.iter().any(|&t| !(t > 0.0 && t < 1.0)) || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter(format!(
                "motion times must be strictly increasing in (0, 1): {:?}",
                self.times
            )));
        }
        let finite = self.rotations_deg.iter().all(|v| v.is_finite())
            && self.translations_mm.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Parameter("motion parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Rotates (about the slice center) then translates, resampling bilinearly
/// with clamp-to-edge. Positive angles turn axis 0 toward axis 1.
pub fn rigid_transform(slice: &Slice2D, rotation_deg: f64, translation_mm: [f64; 2]) -> Result<Slice2D> {
    let [nx, ny] = slice.shape();
    let [sx, sy] = slice.spacing();
    let (cx, cy) = ((nx as f64 - 1.0) / 2.0, (ny as f64 - 1.0) / 2.0);
    let (sin, cos) = rotation_deg.to_radians().sin_cos();
    let src = slice.data();
    let (lx, ly) = ((nx - 1) as f64, (ny - 1) as f64);
    let mut out = Vec::with_capacity(src.len());
    for j in 0..ny {
        let py = (j as f64 - cy) * sy - translation_mm[1];
        for i in 0..nx {
            let px = (i as f64 - cx) * sx - translation_mm[0];
            // inverse rotation R^T
            let qx = cos * px + sin * py;
            let qy = -sin * px + cos * py;
            let x = (qx / sx + cx).clamp(0.0, lx);
            let y = (qy / sy + cy).clamp(0.0, ly);
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(nx - 1), (y0 + 1).min(ny - 1));
            let (tx, ty) = (x - x0 as f64, y - y0 as f64);
            let a = src[x0 + nx * y0] + (src[x1 + nx * y0] - src[x0 + nx * y0]) * tx;
            let b = src[x0 + nx * y1] + (src[x1 + nx * y1] - src[x0 + nx * y1]) * tx;
            out.push(a + (b - a) * ty);
        }
    }
    slice.with_data(out)
}

/// Line ranges along the phase-encode axis, one per acquisition interval.
/// Breakpoints sit at `floor(lines * t)`.
pub fn motion_segments(lines: usize, times: &[f64]) -> Vec<Range<usize>> {
    let mut out = Vec::with_capacity(times.len() + 1);
    let mut start = 0;
    for &t in times {
        let end = ((lines as f64 * t).floor() as usize).clamp(start, lines);
        out.push(start..end);
        start = end;
    }
    out.push(start..lines);
    out
}

/// Fills segment `s` of the output from `spectra[s]`.
pub fn compose_segments(spectra: &[&Kspace2D], segments: &[Range<usize>], axis: usize) -> Result<Kspace2D> {
    if spectra.len() != segments.len() || spectra.is_empty() {
        return Err(Error::Parameter(format!(
            "{} spectra for {} segments",
            spectra.len(),
            segments.len()
        )));
    }
    let shape = spectra[0].shape();
    if spectra.iter().any(|k| k.shape() != shape) {
        return Err(Error::Geometry("spectra shapes differ".into()));
    }
    let mut out = spectra[0].clone();
    let nx = shape[0];
    let dst = out.data_mut();
    for (spec, seg) in spectra.iter().zip(segments).skip(1) {
        let src = spec.data();
        match axis {
            0 => {
                for row in 0..shape[1] {
                    let r = row * nx;
                    dst[r + seg.start..r + seg.end].copy_from_slice(&src[r + seg.start..r + seg.end]);
                }
            }
            _ => {
                dst[seg.start * nx..seg.end * nx].copy_from_slice(&src[seg.start * nx..seg.end * nx]);
            }
        }
    }
    Ok(out)
}

pub fn apply_motion(slice: &Slice2D, p: &MotionParams) -> Result<Slice2D> {
    p.validate()?;
    let mut spectra = Vec::with_capacity(p.num_transforms() + 1);
    spectra.push(fft2_centered(slice)?);
    for (&deg, &t) in p.rotations_deg.iter().zip(&p.translations_mm) {
        spectra.push(fft2_centered(&rigid_transform(slice, deg, t)?)?);
    }
    let lines = slice.shape()[p.axis];
    let segments = motion_segments(lines, &p.times);
    let center = lines / 2;
    let center_seg = segments.iter().position(|r| r.contains(&center)).unwrap_or(0);
    spectra.swap(0, center_seg);
    let refs: Vec<&Kspace2D> = spectra.iter().collect();
    let composed = compose_segments(&refs, &segments, p.axis)?;
    ifft2_centered(&composed, slice)
}
