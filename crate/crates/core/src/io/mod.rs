//! File formats and cohort bookkeeping.

pub mod manifest;
pub mod nifti;
pub mod split;

pub use manifest::{build_manifest, CaseEntry, CaseRef, Manifest, ManifestScan, NamingPattern, Phase, Subject};
pub use nifti::{read_nifti, read_nifti_labels, write_nifti, write_nifti_labels, DataType, NiftiImage, NiftiMeta};
pub use split::{split_subjects, SplitSpec};
