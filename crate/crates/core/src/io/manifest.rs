//! Cohort manifests: subjects, each scanned under up to four breath-hold
//! grades, each with an ED and an ES frame.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

pub const DEFAULT_PATTERN: &str = "{subject}-{intensity}-{phase}";
pub const LABEL_SUFFIX: &str = "-label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "ED")]
    Ed,
    #[serde(rename = "ES")]
    Es,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Ed => "ED",
            Phase::Es => "ES",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ED" => Ok(Phase::Ed),
            "ES" => Ok(Phase::Es),
            _ => Err(Error::Manifest(format!("unknown phase {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseEntry {
    /// Breath-hold grade 1 (full hold) to 4 (intensive breathing).
    pub breath_intensity: u8,
    pub phase: Phase,
    pub image: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub cases: Vec<CaseEntry>,
}

/// A case together with its subject id.
#[derive(Debug, Clone, Copy)]
pub struct CaseRef<'a> {
    pub subject: &'a str,
    pub case: &'a CaseEntry,
}

impl CaseRef<'_> {
    /// `<subject>-<intensity>-<phase>`, unique within a manifest.
    pub fn case_id(&self) -> String {
        case_id(self.subject, self.case.breath_intensity, self.case.phase)
    }
}

pub fn case_id(subject: &str, intensity: u8, phase: Phase) -> String {
    format!("{subject}-{intensity}-{phase}")
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub subjects: Vec<Subject>,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for s in &self.subjects {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate subject id {}", s.id)));
            }
            let mut keys = BTreeSet::new();
            for c in &s.cases {
                if !(1..=4).contains(&c.breath_intensity) {
                    return Err(Error::Manifest(format!(
                        "subject {}: breath intensity {} is not 1-4",
                        s.id, c.breath_intensity
                    )));
                }
                if !keys.insert((c.breath_intensity, c.phase)) {
                    return Err(Error::Manifest(format!(
                        "duplicate case {}",
                        case_id(&s.id, c.breath_intensity, c.phase)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cases(&self) -> impl Iterator<Item = CaseRef<'_>> {
        self.subjects
            .iter()
            .flat_map(|s| s.cases.iter().map(move |case| CaseRef { subject: &s.id, case }))
    }

    pub fn num_cases(&self) -> usize {
        self.subjects.iter().map(|s| s.cases.len()).sum()
    }

    pub fn subject_ids(&self) -> Vec<&str> {
        self.subjects.iter().map(|s| s.id.as_str()).collect()
    }

    /// Sub-manifest with only the listed subjects (in this manifest's order).
    pub fn restrict_to(&self, ids: &[String]) -> Manifest {
        let keep: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
        Manifest {
            subjects: self
                .subjects
                .iter()
                .filter(|s| keep.contains(s.id.as_str()))
                .cloned()
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    fn map_paths(&self, f: impl Fn(&Path) -> PathBuf) -> Manifest {
        let mut m = self.clone();
        for c in m.subjects.iter_mut().flat_map(|s| s.cases.iter_mut()) {
            c.image = f(&c.image);
            c.label = c.label.as_deref().map(&f);
        }
        m
    }

    /// Writes JSON with paths relative to the manifest's directory.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = parent_dir(path);
        let rel = self.map_paths(|p| relative_to(p, dir));
        std::fs::write(path, rel.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Reads JSON; relative paths are taken relative to the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = parent_dir(path);
        Ok(Self::from_json(&s)?.map_paths(|p| dir.join(p)))
    }
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new(""))
}

/// `target` relative to directory `base`, or absolute when no relative
/// form exists.
pub fn relative_to(target: &Path, base: &Path) -> PathBuf {
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let (t, b) = (abs(target), abs(base));
    pathdiff::diff_paths(&t, &b).unwrap_or(t)
}

/// Result of scanning a data directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestScan {
    pub manifest: Manifest,
    /// NIfTI files whose names did not parse, plus labels with no image.
    pub skipped: Vec<PathBuf>,
}

/// Compiled filename template. Placeholders: `{subject}`, `{intensity}`
/// (1-4) and `{phase}` (ED/ES, any case). Label files carry an extra
/// `-label` suffix, and pipeline outputs may end in a stage tag such as
/// `-pre` or `-aug0`.
#[derive(Debug, Clone)]
pub struct NamingPattern {
    regex: Regex,
}

impl NamingPattern {
    pub fn new(template: &str) -> Result<Self> {
        let mut re = String::from("^");
        let mut rest = template;
        let mut seen = BTreeSet::new();
        while let Some(open) = rest.find('{') {
            re.push_str(&regex::escape(&rest[..open]));
            let close = rest[open..]
                .find('}')
                .ok_or_else(|| Error::Config(format!("unclosed placeholder in {template:?}")))?;
            let name = &rest[open + 1..open + close];
            re.push_str(match name {
                "subject" => "(?P<subject>.+?)",
                "intensity" => "(?P<intensity>[1-4])",
                "phase" => "(?P<phase>(?i:ED|ES))",
                other => return Err(Error::Config(format!("unknown placeholder {{{other}}}"))),
            });
            if !seen.insert(name) {
                return Err(Error::Config(format!("placeholder {{{name}}} repeated")));
            }
            rest = &rest[open + close + 1..];
        }
        re.push_str(&regex::escape(rest));
        if seen.len() != 3 {
            return Err(Error::Config(format!(
                "pattern {template:?} must use {{subject}}, {{intensity}} and {{phase}}"
            )));
        }
        re.push_str(&format!(
            "(?P<label>{})?(?:-[A-Za-z][A-Za-z0-9]*)?$",
            regex::escape(LABEL_SUFFIX)
        ));
        let regex = Regex::new(&re).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self { regex })
    }

    /// `(subject, intensity, phase, is_label)` for a file stem.
    pub fn parse(&self, stem: &str) -> Option<(String, u8, Phase, bool)> {
        let c = self.regex.captures(stem)?;
        Some((
            c["subject"].to_owned(),
            c["intensity"].parse().ok()?,
            c["phase"].parse().ok()?,
            c.name("label").is_some(),
        ))
    }
}

impl Default for NamingPattern {
    fn default() -> Self {
        Self::new(DEFAULT_PATTERN).expect("default pattern compiles")
    }
}

/// File name without `.nii` / `.nii.gz`, or `None` for other files.
pub fn nifti_stem(path: &Path) -> Option<&str> {
    let name = path.file_name()?.to_str()?;
    name.strip_suffix(".nii.gz").or_else(|| name.strip_suffix(".nii"))
}

/// Scans `data_root` recursively for NIfTI files named after `pattern`.
pub fn build_manifest(data_root: &Path, pattern: &NamingPattern) -> Result<ManifestScan> {
    type Key = (String, u8, Phase);
    let mut images: BTreeMap<Key, PathBuf> = BTreeMap::new();
    let mut labels: BTreeMap<Key, PathBuf> = BTreeMap::new();
    let mut skipped = Vec::new();

    let mut files: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(data_root).follow_links(true) {
        let entry = entry.map_err(|e| Error::Manifest(format!("walking {}: {e}", data_root.display())))?;
        if entry.file_type().is_file() {
            files.push(entry.into_path());
        }
    }
    files.sort();

    for path in files {
        let Some(stem) = nifti_stem(&path) else { continue };
        let Some((subject, intensity, phase, is_label)) = pattern.parse(stem) else {
            skipped.push(path);
            continue;
        };
        let key = (subject, intensity, phase);
        let slot = if is_label { &mut labels } else { &mut images };
        if let Some(prev) = slot.insert(key.clone(), path.clone()) {
            return Err(Error::Manifest(format!(
                "duplicate case {}: {} and {}",
                case_id(&key.0, key.1, key.2),
                prev.display(),
                path.display()
            )));
        }
    }

    let mut by_subject: BTreeMap<String, Vec<CaseEntry>> = BTreeMap::new();
    for ((subject, intensity, phase), image) in images {
        let label = labels.remove(&(subject.clone(), intensity, phase));
        by_subject.entry(subject).or_default().push(CaseEntry {
            breath_intensity: intensity,
            phase,
            image,
            label,
        });
    }
    skipped.extend(labels.into_values());
    skipped.sort();

    let manifest = Manifest {
        subjects: by_subject
            .into_iter()
            .map(|(id, cases)| Subject { id, cases })
            .collect(),
    };
    manifest.validate()?;
    Ok(ManifestScan { manifest, skipped })
}
