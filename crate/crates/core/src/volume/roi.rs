//! ROI files: one JSON object per line, `{"case": .., "min": [x,y,z], "size": [x,y,z]}`,
//! in voxel indices of the mask grid. Blank lines and lines starting with `#` are skipped.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RoiBox;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiRecord {
    pub case: String,
    pub min: [usize; 3],
    pub size: [usize; 3],
}

impl RoiRecord {
    pub fn roi(&self) -> RoiBox {
        RoiBox::new(self.min, self.size)
    }
}

pub fn parse_roi_records(text: &str) -> Result<BTreeMap<String, RoiBox>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rec: RoiRecord = serde_json::from_str(line)
            .map_err(|e| Error::Config(format!("ROI line {}: {e}", lineno + 1)))?;
        if out.insert(rec.case.clone(), rec.roi()).is_some() {
            return Err(Error::Config(format!("ROI line {}: duplicate case {:?}", lineno + 1, rec.case)));
        }
    }
    Ok(out)
}

pub fn read_roi_file(path: &Path) -> Result<BTreeMap<String, RoiBox>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_roi_records(&text)
}

pub fn format_roi_records(rois: &BTreeMap<String, RoiBox>) -> String {
    let mut s = String::new();
    for (case, roi) in rois {
        let rec = RoiRecord {
            case: case.clone(),
            min: roi.min,
            size: roi.size,
        };
        s.push_str(&serde_json::to_string(&rec).expect("ROI record serializes"));
        s.push('\n');
    }
    s
}

/// Writes records sorted by case id.
pub fn write_roi_file(path: &Path, rois: &BTreeMap<String, RoiBox>) -> Result<()> {
    std::fs::write(path, format_roi_records(rois)).map_err(|e| Error::io(path, e))
}
