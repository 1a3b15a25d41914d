use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{dice, hd95};
use crate::error::{Error, Result};
use crate::labels::{LabelMap, Structure};
use crate::volume::LabelVolume;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureMetrics {
    pub structure: Structure,
    pub dice: f64,
    /// `None` when the structure is missing from prediction or ground truth.
    pub hd95_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub case_id: String,
    pub structures: Vec<StructureMetrics>,
    pub mean_dice: f64,
}

impl MetricsReport {
    pub fn get(&self, s: Structure) -> Option<&StructureMetrics> {
        self.structures.iter().find(|m| m.structure == s)
    }
}

/// Dice and HD95 for LV, MYO and RV, using the ground truth's spacing.
pub fn evaluate_case(case_id: &str, pred: &LabelVolume, gt: &LabelVolume, labels: &LabelMap) -> Result<MetricsReport> {
    labels.validate()?;
    let codes = labels.codes();
    pred.check_codes(&codes)?;
    gt.check_codes(&codes)?;
    let spacing = gt.spacing();
    let mut structures = Vec::with_capacity(3);
    for s in Structure::ALL {
        let code = labels.code(s);
        structures.push(StructureMetrics {
            structure: s,
            dice: dice(pred, gt, code)?,
            hd95_mm: hd95(pred, gt, code, spacing)?,
        });
    }
    let mean_dice = structures.iter().map(|m| m.dice).sum::<f64>() / structures.len() as f64;
    Ok(MetricsReport {
        case_id: case_id.to_owned(),
        structures,
        mean_dice,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSummary {
    pub structure: Structure,
    pub mean_dice: f64,
    pub mean_hd95_mm: Option<f64>,
    pub hd95_defined: usize,
    pub hd95_undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub cases: usize,
    pub structures: Vec<StructureSummary>,
    pub mean_dice: f64,
}

/// Cohort means. Reports are summed in case-id order so the result does
/// not depend on evaluation order.
pub fn aggregate(reports: &[MetricsReport]) -> Result<CohortSummary> {
    if reports.is_empty() {
        return Err(Error::Usage("cannot aggregate zero reports".into()));
    }
    let mut sorted: Vec<&MetricsReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    let n = sorted.len() as f64;

    let structures = Structure::ALL
        .iter()
        .map(|&s| {
            let (mut dice_sum, mut hd_sum, mut defined, mut undefined) = (0.0, 0.0, 0usize, 0usize);
            for r in &sorted {
                let m = r
                    .get(s)
                    .ok_or_else(|| Error::Usage(format!("report {} has no {s} entry", r.case_id)))?;
                dice_sum += m.dice;
                match m.hd95_mm {
                    Some(h) => {
                        hd_sum += h;
                        defined += 1;
                    }
                    None => undefined += 1,
                }
            }
            Ok(StructureSummary {
                structure: s,
                mean_dice: dice_sum / n,
                mean_hd95_mm: (defined > 0).then(|| hd_sum / defined as f64),
                hd95_defined: defined,
                hd95_undefined: undefined,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_dice = sorted.iter().map(|r| r.mean_dice).sum::<f64>() / n;
    Ok(CohortSummary {
        cases: sorted.len(),
        structures,
        mean_dice,
    })
}

impl CohortSummary {
    pub fn get(&self, s: Structure) -> Option<&StructureSummary> {
        self.structures.iter().find(|m| m.structure == s)
    }

    /// Plain-text table with DICE and Hausdorff (mm) column groups, one row
    /// per named summary.
    pub fn table(rows: &[(&str, &CohortSummary)]) -> String {
        let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(8);
        let mut out = String::new();
        let head = format!("{:width$}  {:<22}  {}", "", "DICE", "Hausdorff (mm)");
        let _ = writeln!(out, "{}", head.trim_end());
        let head = format!(
            "{:width$}  {:<6} {:<6} {:<6}    {:<6} {:<6} {}",
            "", "LV", "MYO", "RV", "LV", "MYO", "RV"
        );
        let _ = writeln!(out, "{}", head.trim_end());
        for (name, summary) in rows {
            let mut line = format!("{name:width$} ");
            for s in Structure::ALL {
                let d = summary.get(s).map(|m| m.mean_dice);
                let _ = write!(line, " {:<6}", d.map_or("-".into(), |d| format!("{d:.3}")));
            }
            line.push_str("   ");
            for s in Structure::ALL {
                let h = summary.get(s).and_then(|m| m.mean_hd95_mm);
                let _ = write!(line, " {:<6}", h.map_or("-".into(), |h| format!("{h:.2}")));
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }
}

/// One CSV line: `case_id,structure,dice,hd95_mm` (empty hd95 when undefined).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub case_id: String,
    pub structure: Structure,
    pub dice: f64,
    pub hd95_mm: Option<f64>,
}

pub fn write_metrics_csv(path: &Path, reports: &[MetricsReport]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in reports {
        for m in &r.structures {
            w.serialize(MetricsRow {
                case_id: r.case_id.clone(),
                structure: m.structure,
                dice: m.dice,
                hd95_mm: m.hd95_mm,
            })
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
