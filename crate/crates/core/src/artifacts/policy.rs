use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    apply_bias_field, apply_gamma, apply_ghosting, apply_motion, BiasFieldParams, GammaParams, GhostingParams,
    MotionParams,
};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::volume::{Slice2D, SliceSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    Motion,
    Ghosting,
    BiasField,
    Gamma,
}

impl TransformKind {
    pub const ALL: [TransformKind; 4] = [Self::Motion, Self::Ghosting, Self::BiasField, Self::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Self::Motion => "motion",
            Self::Ghosting => "ghosting",
            Self::BiasField => "bias-field",
            Self::Gamma => "gamma",
        }
    }
}

/// Relative odds of each transform. Motion is three times as likely as
/// each of the others by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyWeights {
    pub motion: f64,
    pub ghosting: f64,
    pub bias_field: f64,
    pub gamma: f64,
}

impl Default for PolicyWeights {
    fn default() -> Self {
        Self {
            motion: 3.0,
            ghosting: 1.0,
            bias_field: 1.0,
            gamma: 1.0,
        }
    }
}

impl PolicyWeights {
    pub fn as_array(&self) -> [f64; 4] {
        [self.motion, self.ghosting, self.bias_field, self.gamma]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Parameter(format!(
                "policy weights must be finite and >= 0: {w:?}"
            )));
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Parameter("policy weights sum to zero".into()));
        }
        Ok(())
    }

    pub fn probabilities(&self) -> Result<[f64; 4]> {
        self.validate()?;
        let w = self.as_array();
        let total: f64 = w.iter().sum();
        Ok(w.map(|x| x / total))
    }
}

/// Categorical draw over the four transform kinds.
pub fn sample_one_of<R: Rng + ?Sized>(weights: &PolicyWeights, rng: &mut R) -> Result<TransformKind> {
    weights.validate()?;
    let dist = WeightedIndex::new(weights.as_array()).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(TransformKind::ALL[dist.sample(rng)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionRanges {
    pub num_transforms: usize,
    pub degrees_max: f64,
    pub translation_max_mm: f64,
    pub axes: Vec<usize>,
}

impl Default for MotionRanges {
    fn default() -> Self {
        Self {
            num_transforms: 2,
            degrees_max: 10.0,
            translation_max_mm: 10.0,
            axes: vec![0, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GhostingRanges {
    pub num_ghosts: (usize, usize),
    pub intensity: (f64, f64),
    pub restore_center: f64,
    pub axes: Vec<usize>,
}

impl Default for GhostingRanges {
    fn default() -> Self {
        Self {
            num_ghosts: (4, 10),
            intensity: (0.5, 1.0),
            restore_center: 0.02,
            axes: vec![0, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasFieldRanges {
    pub order: usize,
    pub coefficient_max: f64,
}

impl Default for BiasFieldRanges {
    fn default() -> Self {
        Self {
            order: 3,
            coefficient_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaRanges {
    pub log_gamma_max: f64,
}

impl Default for GammaRanges {
    fn default() -> Self {
        Self { log_gamma_max: 0.3 }
    }
}

/// Weights plus the parameter ranges each transform samples from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationPolicy {
    pub weights: PolicyWeights,
    pub motion: MotionRanges,
    pub ghosting: GhostingRanges,
    pub bias_field: BiasFieldRanges,
    pub gamma: GammaRanges,
}

fn symmetric<R: Rng + ?Sized>(rng: &mut R, max: f64) -> f64 {
    if max > 0.0 {
        rng.random_range(-max..=max)
    } else {
        0.0
    }
}

fn pick_axis<R: Rng + ?Sized>(rng: &mut R, axes: &[usize]) -> Result<usize> {
    match axes {
        [] => Err(Error::Parameter("no axes configured".into())),
        [a] => Ok(*a),
        _ => Ok(axes[rng.random_range(0..axes.len())]),
    }
}

impl AugmentationPolicy {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        let bad_axis = |axes: &[usize]| axes.is_empty() || axes.iter().any(|&a| a > 1);
        if bad_axis(&self.motion.axes) || bad_axis(&self.ghosting.axes) {
            return Err(Error::Parameter("axes must be a nonempty subset of {0, 1}".into()));
        }
        let m = &self.motion;
        if !(m.degrees_max >= 0.0 && m.translation_max_mm >= 0.0) {
            return Err(Error::Parameter("motion ranges must be >= 0".into()));
        }
        let g = &self.ghosting;
        if g.num_ghosts.0 > g.num_ghosts.1
            || !(0.0 <= g.intensity.0 && g.intensity.0 <= g.intensity.1 && g.intensity.1 <= 1.0)
        {
            return Err(Error::Parameter("ghosting ranges are inverted or out of [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&g.restore_center) {
            return Err(Error::Parameter("ghosting restore_center must be in [0, 1)".into()));
        }
        if !(self.bias_field.coefficient_max >= 0.0 && self.gamma.log_gamma_max >= 0.0) {
            return Err(Error::Parameter("bias/gamma ranges must be >= 0".into()));
        }
        Ok(())
    }

    /// Draws concrete parameters for `kind`.
    pub fn sample_params<R: Rng + ?Sized>(&self, kind: TransformKind, rng: &mut R) -> Result<TransformParams> {
        Ok(match kind {
            TransformKind::Motion => {
                let m = &self.motion;
                let n = m.num_transforms;
                let step = 1.0 / (n + 1) as f64;
                let mut rotations_deg = Vec::with_capacity(n);
                let mut translations_mm = Vec::with_capacity(n);
                let mut times = Vec::with_capacity(n);
                for k in 0..n {
                    rotations_deg.push(symmetric(rng, m.degrees_max));
                    translations_mm.push([
                        symmetric(rng, m.translation_max_mm),
                        symmetric(rng, m.translation_max_mm),
                    ]);
                    times.push((k + 1) as f64 * step + symmetric(rng, step / 20.0));
                }
                let axis = pick_axis(rng, &m.axes)?;
                TransformParams::Motion(MotionParams {
                    rotations_deg,
                    translations_mm,
                    times,
                    axis,
                })
            }
            TransformKind::Ghosting => {
                let g = &self.ghosting;
                let num_ghosts = rng.random_range(g.num_ghosts.0..=g.num_ghosts.1);
                let intensity = if g.intensity.1 > g.intensity.0 {
                    rng.random_range(g.intensity.0..=g.intensity.1)
                } else {
                    g.intensity.0
                };
                let axis = pick_axis(rng, &g.axes)?;
                TransformParams::Ghosting(GhostingParams {
                    num_ghosts,
                    axis,
                    intensity,
                    restore_center: g.restore_center,
                })
            }
            TransformKind::BiasField => {
                let b = &self.bias_field;
                let coefficients = (0..BiasFieldParams::coefficient_count(b.order))
                    .map(|_| symmetric(rng, b.coefficient_max))
                    .collect();
                TransformParams::BiasField(BiasFieldParams {
                    order: b.order,
                    coefficients,
                })
            }
            TransformKind::Gamma => TransformParams::Gamma(GammaParams {
                log_gamma: symmetric(rng, self.gamma.log_gamma_max),
            }),
        })
    }
}

/// One transform with all of its parameters fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum TransformParams {
    Motion(MotionParams),
    Ghosting(GhostingParams),
    BiasField(BiasFieldParams),
    Gamma(GammaParams),
}

impl TransformParams {
    pub fn kind(&self) -> TransformKind {
        match self {
            Self::Motion(_) => TransformKind::Motion,
            Self::Ghosting(_) => TransformKind::Ghosting,
            Self::BiasField(_) => TransformKind::BiasField,
            Self::Gamma(_) => TransformKind::Gamma,
        }
    }

    pub fn apply(&self, slice: &Slice2D) -> Result<Slice2D> {
        match self {
            Self::Motion(p) => apply_motion(slice, p),
            Self::Ghosting(p) => apply_ghosting(slice, p),
            Self::BiasField(p) => apply_bias_field(slice, p),
            Self::Gamma(p) => apply_gamma(slice, p),
        }
    }
}

/// Everything needed to replay an augmentation bitwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    #[serde(flatten)]
    pub transform: TransformParams,
    pub seed: u64,
    pub source: SliceSource,
}

impl TransformRecord {
    pub fn kind(&self) -> TransformKind {
        self.transform.kind()
    }

    /// Re-applies the recorded transform.
    pub fn replay(&self, slice: &Slice2D) -> Result<Slice2D> {
        self.transform.apply(slice)
    }
}

/// Applies exactly one transform drawn from `policy`, using a generator
/// seeded with `seed`.
pub fn augment_slice(slice: &Slice2D, policy: &AugmentationPolicy, seed: u64) -> Result<(Slice2D, TransformRecord)> {
    policy.validate()?;
    let mut rng = rng_from_seed(seed);
    let kind = sample_one_of(&policy.weights, &mut rng)?;
    let transform = policy.sample_params(kind, &mut rng)?;
    let out = transform.apply(slice)?;
    Ok((
        out,
        TransformRecord {
            transform,
            seed,
            source: slice.source().clone(),
        },
    ))
}
