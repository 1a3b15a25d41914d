use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Slice2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub log_gamma: f64,
}

impl GammaParams {
    pub fn gamma(&self) -> f64 {
        self.log_gamma.exp()
    }
}

/// Contrast change: min-max normalize, raise to `gamma`, map back onto the
/// original `[min, max]`. Constant slices are returned unchanged.
pub fn apply_gamma(slice: &Slice2D, p: &GammaParams) -> Result<Slice2D> {
    if !p.log_gamma.is_finite() {
        return Err(Error::Parameter("log_gamma must be finite".into()));
    }
    let data = slice.data();
    let (min, max) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::Numeric("slice contains non-finite values".into()));
    }
    if max <= min {
        return Ok(slice.clone());
    }
    let range = max - min;
    let gamma = p.gamma();
    slice.with_data(
        data.iter()
            .map(|&v| min + ((v - min) / range).powf(gamma) * range)
            .collect(),
    )
}
