use serde::{Deserialize, Serialize};

use super::fft::{fft2_centered, ifft2_centered};
use crate::error::{Error, Result};
use crate::volume::Slice2D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostingParams {
    pub num_ghosts: usize,
    pub axis: usize,
    pub intensity: f64,
    /// Fraction of central k-space lines left untouched.
    pub restore_center: f64,
}

impl GhostingParams {
    pub fn validate(&self) -> Result<()> {
        if self.axis > 1 {
            return Err(Error::Parameter(format!("ghosting axis {} is not 0 or 1", self.axis)));
        }
        if !(0.0..=1.0).contains(&self.intensity) {
            return Err(Error::Parameter(format!(
                "ghost intensity {} not in [0, 1]",
                self.intensity
            )));
        }
        if !(0.0..1.0).contains(&self.restore_center) {
            return Err(Error::Parameter(format!(
                "restore_center {} not in [0, 1)",
                self.restore_center
            )));
        }
        Ok(())
    }

    /// Whether k-space line `line` (of `lines`) along the ghost axis is attenuated.
    pub fn is_ghost_line(&self, line: usize, lines: usize) -> bool {
        if self.num_ghosts == 0 {
            return false;
        }
        let offset = line as i64 - (lines / 2) as i64;
        let keep = (self.restore_center * lines as f64 / 2.0).floor() as i64;
        offset.abs() > keep && offset.rem_euclid(self.num_ghosts as i64) == 0
    }
}

/// Attenuates every `num_ghosts`-th phase-encode line, counted from the
/// k-space center, by `1 - intensity`. The central band of
/// `restore_center * lines` lines, and always the DC line, is left as is.
pub fn apply_ghosting(slice: &Slice2D, p: &GhostingParams) -> Result<Slice2D> {
    p.validate()?;
    let mut k = fft2_centered(slice)?;
    let [nx, ny] = k.shape();
    let lines = k.shape()[p.axis];
    let gain = 1.0 - p.intensity;
    let data = k.data_mut();
    for line in (0..lines).filter(|&l| p.is_ghost_line(l, lines)) {
        if p.axis == 0 {
            for v in 0..ny {
                data[line + nx * v] *= gain;
            }
        } else {
            for c in &mut data[line * nx..(line + 1) * nx] {
                *c *= gain;
            }
        }
    }
    ifft2_centered(&k, slice)
}
