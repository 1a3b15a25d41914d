//! Orthonormal centered 2-D DFT.
//!
//! `fft2_centered` returns the spectrum with the zero-frequency coefficient
//! at index `(nx / 2, ny / 2)`; spatial data is not pre-shifted.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::volume::Slice2D;

/// Centered complex spectrum of a slice, same `[nx, ny]` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Kspace2D {
    shape: [usize; 2],
    data: Vec<Complex64>,
}

impl Kspace2D {
    pub fn new(shape: [usize; 2], data: Vec<Complex64>) -> Result<Self> {
        if shape.contains(&0) || data.len() != shape[0] * shape[1] {
            return Err(Error::Geometry(format!(
                "k-space shape {shape:?} does not match {} coefficients",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.data[u + self.shape[0] * v]
    }

    /// Index of the DC coefficient.
    pub fn center(&self) -> [usize; 2] {
        [self.shape[0] / 2, self.shape[1] / 2]
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, dir))
}

/// In-place unnormalized 2-D transform of a buffer laid out `[nx, ny]`
/// with axis 0 contiguous.
fn transform(buf: &mut [Complex64], shape: [usize; 2], dir: FftDirection) {
    let [nx, ny] = shape;
    let row = plan(nx, dir);
    let mut scratch = vec![Complex64::default(); row.get_inplace_scratch_len()];
    for r in buf.chunks_exact_mut(nx) {
        row.process_with_scratch(r, &mut scratch);
    }
    if ny > 1 {
        let mut t = vec![Complex64::default(); buf.len()];
        transpose::transpose(buf, &mut t, nx, ny);
        let col = plan(ny, dir);
        scratch.resize(col.get_inplace_scratch_len(), Complex64::default());
        for c in t.chunks_exact_mut(ny) {
            col.process_with_scratch(c, &mut scratch);
        }
        transpose::transpose(&t, buf, ny, nx);
    }
}

/// `out[m] = in[(m - n/2) mod n]` along both axes (or the inverse).
fn shift(buf: &[Complex64], shape: [usize; 2], inverse: bool) -> Vec<Complex64> {
    let [nx, ny] = shape;
    let (cx, cy) = if inverse {
        (nx - nx / 2, ny - ny / 2)
    } else {
        (nx / 2, ny / 2)
    };
    let mut out = vec![Complex64::default(); buf.len()];
    for j in 0..ny {
        let dj = (j + cy) % ny;
        let (src, dst) = (&buf[j * nx..(j + 1) * nx], &mut out[dj * nx..(dj + 1) * nx]);
        dst[cx..].copy_from_slice(&src[..nx - cx]);
        dst[..cx].copy_from_slice(&src[nx - cx..]);
    }
    out
}

pub fn fft2_centered(slice: &Slice2D) -> Result<Kspace2D> {
    if slice.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("slice contains non-finite values".into()));
    }
    let shape = slice.shape();
    let mut buf: Vec<Complex64> = slice.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(&mut buf, shape, FftDirection::Forward);
    let scale = 1.0 / ((shape[0] * shape[1]) as f64).sqrt();
    for c in &mut buf {
        *c *= scale;
    }
    Ok(Kspace2D {
        shape,
        data: shift(&buf, shape, false),
    })
}

/// Inverse of [`fft2_centered`], keeping the complex result.
pub fn ifft2_centered_complex(k: &Kspace2D) -> Result<Vec<Complex64>> {
    if k.data.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::Numeric("spectrum contains non-finite values".into()));
    }
    let mut buf = shift(&k.data, k.shape, true);
    transform(&mut buf, k.shape, FftDirection::Inverse);
    let scale = 1.0 / ((k.shape[0] * k.shape[1]) as f64).sqrt();
    for c in &mut buf {
        *c *= scale;
    }
    Ok(buf)
}

/// Inverse transform keeping the real part, with `like`'s geometry and provenance.
pub fn ifft2_centered(k: &Kspace2D, like: &Slice2D) -> Result<Slice2D> {
    if k.shape != like.shape() {
        return Err(Error::Geometry(format!(
            "k-space shape {:?} does not match slice {:?}",
            k.shape,
            like.shape()
        )));
    }
    let buf = ifft2_centered_complex(k)?;
    like.with_data(buf.into_iter().map(|c| c.re).collect())
}
