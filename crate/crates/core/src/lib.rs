//! Deterministic cardiac MRI data pipeline: canonical reorientation,
//! resampling, cropping, histogram standardization, k-space artifact
//! augmentation, subject-level splitting and Dice / HD95 evaluation.
//!
//! The `examples/` directory has one runnable program per capability.

pub mod artifacts;
pub mod error;
pub mod io;
pub mod labels;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod seed;
pub mod standardize;
pub mod volume;

pub use error::{Error, Result};
pub use labels::{LabelMap, Structure};
pub use volume::{Grid, LabelVolume, Slice2D, Volume};
