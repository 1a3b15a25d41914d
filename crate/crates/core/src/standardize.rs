//! Landmark-based histogram standardization.
//!
//! Training: each volume's intensity percentiles are mapped linearly onto the
//! reference interval `[0, 100]` (first landmark to 0, last to 100) and the
//! rescaled landmark vectors are averaged position-wise into the standard
//! scale. Standardizing a volume maps its own percentiles onto that scale
//! piecewise-linearly, extrapolating past the outer landmarks with the
//! slope of the outermost segments.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Volume;

pub const REFERENCE_RANGE: (f64, f64) = (0.0, 100.0);

pub const DEFAULT_PERCENTILES: [f64; 11] = [1.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 99.0];

const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Foreground {
    /// Every voxel counts.
    #[default]
    None,
    /// Voxels strictly above the volume mean.
    MeanThreshold,
}

/// Learned percentiles and the standard intensity scale they map onto.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkModel {
    percentiles: Vec<f64>,
    standard_scale: Vec<f64>,
    #[serde(default)]
    foreground: Foreground,
    version: u32,
}

impl LandmarkModel {
    pub fn new(percentiles: Vec<f64>, standard_scale: Vec<f64>, foreground: Foreground) -> Result<Self> {
        let model = Self {
            percentiles,
            standard_scale,
            foreground,
            version: MODEL_VERSION,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        validate_percentiles(&self.percentiles)?;
        if self.standard_scale.len() != self.percentiles.len() {
            return Err(Error::Parameter(format!(
                "{} percentiles but {} standard scale entries",
                self.percentiles.len(),
                self.standard_scale.len()
            )));
        }
        if self.standard_scale.iter().any(|v| !v.is_finite()) || self.standard_scale.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Parameter(
                "standard scale must be finite and nondecreasing".into(),
            ));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::Parameter(format!(
                "unsupported landmark model version {}",
                self.version
            )));
        }
        Ok(())
    }

    pub fn percentiles(&self) -> &[f64] {
        &self.percentiles
    }

    pub fn standard_scale(&self) -> &[f64] {
        &self.standard_scale
    }

    pub fn foreground(&self) -> Foreground {
        self.foreground
    }

    /// `(s_min, s_max)` of the standard scale.
    pub fn value_range(&self) -> (f64, f64) {
        (self.standard_scale[0], *self.standard_scale.last().unwrap())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("landmark model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

fn validate_percentiles(p: &[f64]) -> Result<()> {
    if p.len() < 2 {
        return Err(Error::Parameter("need at least two percentiles".into()));
    }
    if p.iter().any(|&x| !(x > 0.0 && x < 100.0)) {
        return Err(Error::Parameter(format!("percentiles must lie in (0, 100): {p:?}")));
    }
    if p.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter(format!(
            "percentiles must be strictly increasing: {p:?}"
        )));
    }
    Ok(())
}

/// Linear-interpolated percentile (`q` in [0, 100]) of an ascending slice.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q / 100.0 * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let t = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * t
}

fn sorted_foreground(vol: &Volume, foreground: Foreground) -> Result<Vec<f64>> {
    let data = vol.data();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("volume contains non-finite intensities".into()));
    }
    let mut values: Vec<f64> = match foreground {
        Foreground::None => data.to_vec(),
        Foreground::MeanThreshold => {
            let mean = data.iter().sum::<f64>() / data.len() as f64;
            data.iter().copied().filter(|&v| v > mean).collect()
        }
    };
    if values.is_empty() {
        return Err(Error::Mask("no voxels above the mean threshold".into()));
    }
    values.sort_unstable_by(f64::total_cmp);
    Ok(values)
}

/// Intensity values of `vol` at `percentiles`.
pub fn volume_landmarks(vol: &Volume, percentiles: &[f64], foreground: Foreground) -> Result<Vec<f64>> {
    let values = sorted_foreground(vol, foreground)?;
    let landmarks: Vec<f64> = percentiles.iter().map(|&q| percentile_sorted(&values, q)).collect();
    if landmarks[0] == *landmarks.last().unwrap() {
        return Err(Error::DegenerateHistogram(format!(
            "outermost landmarks coincide at {}",
            landmarks[0]
        )));
    }
    Ok(landmarks)
}

fn rescale_to_reference(landmarks: &[f64]) -> Vec<f64> {
    let (lo, hi) = (landmarks[0], *landmarks.last().unwrap());
    let (r0, r1) = REFERENCE_RANGE;
    landmarks
        .iter()
        .map(|&x| r0 + (x - lo) / (hi - lo) * (r1 - r0))
        .collect()
}

/// Learns a standard scale from training volumes. Volumes are reduced in
/// the given order, so the result does not depend on how they were loaded.
pub fn fit_landmarks(train: &[Volume], percentiles: &[f64], foreground: Foreground) -> Result<LandmarkModel> {
    validate_percentiles(percentiles)?;
    if train.is_empty() {
        return Err(Error::Parameter("no training volumes".into()));
    }
    let mut sum = vec![0.0; percentiles.len()];
    for vol in train {
        let rescaled = rescale_to_reference(&volume_landmarks(vol, percentiles, foreground)?);
        for (s, r) in sum.iter_mut().zip(rescaled) {
            *s += r;
        }
    }
    let n = train.len() as f64;
    let scale = sum.into_iter().map(|s| s / n).collect();
    LandmarkModel::new(percentiles.to_vec(), scale, foreground)
}

/// Monotone piecewise-linear map from a volume's landmarks onto the standard scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkMapping {
    from: Vec<f64>,
    to: Vec<f64>,
    slope_low: f64,
    slope_high: f64,
}

impl LandmarkMapping {
    pub fn new(from: Vec<f64>, to: Vec<f64>) -> Result<Self> {
        let n = from.len();
        if n < 2 || to.len() != n {
            return Err(Error::Parameter("landmark mapping needs two equal-length lists".into()));
        }
        let span = from[n - 1] - from[0];
        if span <= 0.0 {
            return Err(Error::DegenerateHistogram("landmarks span zero width".into()));
        }
        let overall = (to[n - 1] - to[0]) / span;
        let slope = |a: usize, b: usize| {
            let w = from[b] - from[a];
            if w > 0.0 {
                (to[b] - to[a]) / w
            } else {
                overall
            }
        };
        let slope_low = slope(0, 1);
        let slope_high = slope(n - 2, n - 1);
        Ok(Self {
            from,
            to,
            slope_low,
            slope_high,
        })
    }

    pub fn apply(&self, v: f64) -> f64 {
        let n = self.from.len();
        if v <= self.from[0] {
            return self.to[0] + (v - self.from[0]) * self.slope_low;
        }
        if v >= self.from[n - 1] {
            return self.to[n - 1] + (v - self.from[n - 1]) * self.slope_high;
        }
        // first landmark strictly above v; segments of zero width are never selected
        let hi = self.from.partition_point(|&x| x <= v);
        let lo = hi - 1;
        let t = (v - self.from[lo]) / (self.from[hi] - self.from[lo]);
        self.to[lo] + (self.to[hi] - self.to[lo]) * t
    }
}

/// Builds the mapping that takes `vol` onto `model`'s standard scale.
pub fn mapping_for(vol: &Volume, model: &LandmarkModel) -> Result<LandmarkMapping> {
    model.validate()?;
    let landmarks = volume_landmarks(vol, &model.percentiles, model.foreground)?;
    LandmarkMapping::new(landmarks, model.standard_scale.clone())
}

/// Maps every voxel of `vol` onto the model's standard scale.
pub fn standardize(vol: &Volume, model: &LandmarkModel) -> Result<Volume> {
    let mapping = mapping_for(vol, model)?;
    Ok(vol.map(|v| mapping.apply(v)))
}
