//! Slice-level artifact augmentations (rigid motion, ghosting, bias field,
//! gamma) and the weighted one-of policy that picks between them.
//!
//! Every transform is a pure function of the slice and an explicit
//! parameter set; randomness only enters through [`augment_slice`], which
//! records what it drew so the result can be replayed.

mod bias;
mod fft;
mod gamma;
mod ghosting;
mod motion;
mod policy;

pub use bias::{apply_bias_field, bias_field, BiasFieldParams};
pub use fft::{fft2_centered, ifft2_centered, ifft2_centered_complex, Kspace2D};
pub use gamma::{apply_gamma, GammaParams};
pub use ghosting::{apply_ghosting, GhostingParams};
pub use motion::{apply_motion, compose_segments, motion_segments, rigid_transform, MotionParams};
pub use policy::{
    augment_slice, sample_one_of, AugmentationPolicy, BiasFieldRanges, GammaRanges, GhostingRanges, MotionRanges,
    PolicyWeights, TransformKind, TransformParams, TransformRecord,
};
