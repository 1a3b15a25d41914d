use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Structure {
    #[serde(rename = "LV")]
    Lv,
    #[serde(rename = "MYO")]
    Myo,
    #[serde(rename = "RV")]
    Rv,
}

impl Structure {
    pub const ALL: [Structure; 3] = [Structure::Lv, Structure::Myo, Structure::Rv];

    pub fn name(self) -> &'static str {
        match self {
            Structure::Lv => "LV",
            Structure::Myo => "MYO",
            Structure::Rv => "RV",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Integer code of each structure in label volumes. Code 0 is background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub lv: u16,
    pub myo: u16,
    pub rv: u16,
}

impl Default for LabelMap {
    fn default() -> Self {
        Self { lv: 1, myo: 2, rv: 3 }
    }
}

impl LabelMap {
    pub fn new(lv: u16, myo: u16, rv: u16) -> Result<Self> {
        let map = Self { lv, myo, rv };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.codes();
        if c.contains(&0) || c[0] == c[1] || c[0] == c[2] || c[1] == c[2] {
            return Err(Error::Config(format!(
                "label codes must be distinct and nonzero: {self}"
            )));
        }
        Ok(())
    }

    pub fn code(&self, s: Structure) -> u16 {
        match s {
            Structure::Lv => self.lv,
            Structure::Myo => self.myo,
            Structure::Rv => self.rv,
        }
    }

    pub fn codes(&self) -> [u16; 3] {
        [self.lv, self.myo, self.rv]
    }
}

impl fmt::Display for LabelMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lv={},myo={},rv={}", self.lv, self.myo, self.rv)
    }
}

impl FromStr for LabelMap {
    type Err = Error;

    /// Parses `lv=1,myo=2,rv=3`; missing keys keep their default code.
    fn from_str(s: &str) -> Result<Self> {
        let mut map = LabelMap::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=code, got {part:?}")))?;
            let code: u16 = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad label code {value:?}")))?;
            match key.trim().to_ascii_lowercase().as_str() {
                "lv" => map.lv = code,
                "myo" => map.myo = code,
                "rv" => map.rv = code,
                other => return Err(Error::Config(format!("unknown structure {other:?}"))),
            }
        }
        map.validate()?;
        Ok(map)
    }
}
