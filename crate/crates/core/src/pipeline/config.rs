use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::AugmentationPolicy;
use crate::error::{Error, Result};
use crate::io::manifest::DEFAULT_PATTERN;
use crate::io::split::DEFAULT_VALIDATION_FRACTION;
use crate::labels::LabelMap;
use crate::standardize::{Foreground, DEFAULT_PERCENTILES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpacingConfig {
    /// In-plane spacing (mm) for both in-plane axes; `None` keeps the input.
    pub inplane_mm: Option<f64>,
    /// Through-plane spacing (mm); `None` keeps the input.
    pub through_plane_mm: Option<f64>,
}

impl Default for SpacingConfig {
    fn default() -> Self {
        Self {
            inplane_mm: Some(1.25),
            through_plane_mm: None,
        }
    }
}

impl SpacingConfig {
    pub fn target_for(&self, current: [f64; 3]) -> [f64; 3] {
        [
            self.inplane_mm.unwrap_or(current[0]),
            self.inplane_mm.unwrap_or(current[1]),
            self.through_plane_mm.unwrap_or(current[2]),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CropMode {
    #[default]
    Center,
    /// Centered on the label centroid; falls back to center without labels.
    MaskCentroid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropConfig {
    pub size: [usize; 2],
    pub mode: CropMode,
    pub pad_value: f64,
}

impl Default for CropConfig {
    fn default() -> Self {
        Self {
            size: [256, 256],
            mode: CropMode::Center,
            pad_value: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardizeStage {
    #[default]
    AfterCrop,
    BeforeCrop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StandardizeConfig {
    pub percentiles: Vec<f64>,
    pub foreground: Foreground,
    pub stage: StandardizeStage,
}

impl Default for StandardizeConfig {
    fn default() -> Self {
        Self {
            percentiles: DEFAULT_PERCENTILES.to_vec(),
            foreground: Foreground::None,
            stage: StandardizeStage::AfterCrop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Augmented copies written per case.
    pub copies: u32,
    pub policy: AugmentationPolicy,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            copies: 1,
            policy: AugmentationPolicy::default(),
        }
    }
}

/// Everything that influences pipeline outputs, apart from inputs and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub spacing: SpacingConfig,
    pub crop: CropConfig,
    pub standardize: StandardizeConfig,
    pub augment: AugmentConfig,
    pub labels: LabelMap,
    pub naming_pattern: String,
    pub validation_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            spacing: SpacingConfig::default(),
            crop: CropConfig::default(),
            standardize: StandardizeConfig::default(),
            augment: AugmentConfig::default(),
            labels: LabelMap::default(),
            naming_pattern: DEFAULT_PATTERN.to_owned(),
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
        }
    }
}

impl PipelineConfig {
    /// Reads TOML or JSON, chosen by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            Some("json") => {
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            _ => {
                return Err(Error::Config(format!(
                    "{}: config must be .toml or .json",
                    path.display()
                )))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: Option<f64>| v.is_none_or(|s| s > 0.0 && s.is_finite());
        if !positive(self.spacing.inplane_mm) || !positive(self.spacing.through_plane_mm) {
            return Err(Error::Config("target spacing must be positive".into()));
        }
        if self.crop.size.contains(&0) {
            return Err(Error::Config("crop size must be positive".into()));
        }
        self.labels.validate()?;
        self.augment
            .policy
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        crate::standardize::LandmarkModel::new(
            self.standardize.percentiles.clone(),
            vec![0.0; self.standardize.percentiles.len()],
            self.standardize.foreground,
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 (hex) of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}
