use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::manifest::Manifest;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.2;

/// Subject-level train/validation partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub validation_fraction: f64,
    pub train: Vec<String>,
    pub validation: Vec<String>,
}

impl SplitSpec {
    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }
}

/// Puts `round(fraction * N)` subjects in validation, picked by a seeded
/// shuffle of the sorted subject ids. Both lists come back sorted.
pub fn split_subjects(manifest: &Manifest, fraction: f64, seed: u64) -> Result<SplitSpec> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "validation fraction {fraction} not in (0, 1)"
        )));
    }
    let mut ids: Vec<String> = manifest.subjects.iter().map(|s| s.id.clone()).collect();
    ids.sort();
    ids.dedup();
    let n = ids.len();
    let n_val = (fraction * n as f64).round() as usize;
    if n_val == 0 || n_val == n {
        return Err(Error::Parameter(format!(
            "fraction {fraction} of {n} subjects leaves an empty split"
        )));
    }
    let mut rng = rng_from_seed(seed);
    ids.shuffle(&mut rng);
    let mut validation = ids.split_off(n - n_val);
    ids.sort();
    validation.sort();
    Ok(SplitSpec {
        seed,
        validation_fraction: fraction,
        train: ids,
        validation,
    })
}
