//! Phantom fixtures on disk: reference and prediction volumes, ROI records,
//! the expected graph and the spec that produced them.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{Error, Result};
use crate::phantom::{apply_corruptions, generate_phantom, Corruption, PhantomSpec};
use crate::volume::{read_roi_file, write_roi_file, write_volume, LabelMap};

/// Files written for one fixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureFiles {
    pub gt: PathBuf,
    pub pred: Option<PathBuf>,
    pub roi: PathBuf,
    pub graph: PathBuf,
    pub spec: PathBuf,
}

impl FixtureFiles {
    pub fn all(&self) -> Vec<&Path> {
        let mut v = vec![self.gt.as_path()];
        v.extend(self.pred.as_deref());
        v.extend([self.roi.as_path(), self.graph.as_path(), self.spec.as_path()]);
        v
    }
}

/// Writes `out/gt/<id>.nii.gz`, `out/pred/<id>.nii.gz` when corruptions are
/// given, merges the case into `out/roi.jsonl`, and writes `out/<id>.graph.json`
/// and `out/<id>.spec.toml`. Nothing is written unless `out` already exists.
pub fn write_phantom_fixture(
    out: &Path,
    case_id: &str,
    spec: &PhantomSpec,
    corruptions: &[Corruption],
    map: &LabelMap,
) -> Result<FixtureFiles> {
    if !out.is_dir() {
        return Err(Error::io(
            out,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    if case_id.is_empty() || case_id.contains(['/', '\\']) {
        return Err(Error::Config(format!("invalid case id {case_id:?}")));
    }
    let phantom = generate_phantom(spec, map)?;
    let pred = if corruptions.is_empty() {
        None
    } else {
        Some(apply_corruptions(&phantom.volume, corruptions, map)?)
    };

    let mkdir = |p: PathBuf| -> Result<PathBuf> {
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    let gt_path = mkdir(out.join("gt"))?.join(format!("{case_id}.nii.gz"));
    write_volume(&phantom.volume, &gt_path)?;
    let pred_path = match &pred {
        Some(v) => {
            let p = mkdir(out.join("pred"))?.join(format!("{case_id}.nii.gz"));
            write_volume(v, &p)?;
            Some(p)
        }
        None => None,
    };

    let roi_path = out.join("roi.jsonl");
    let mut rois = if roi_path.exists() { read_roi_file(&roi_path)? } else { Default::default() };
    rois.insert(case_id.to_string(), phantom.roi);
    write_roi_file(&roi_path, &rois)?;

    let graph_path = out.join(format!("{case_id}.graph.json"));
    let graph = json!({
        "case_id": case_id,
        "graph": phantom.graph,
        "corruptions": corruptions.iter().map(ToString::to_string).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&graph).expect("graph serializes") + "\n";
    std::fs::write(&graph_path, text).map_err(|e| Error::io(&graph_path, e))?;

    let spec_path = out.join(format!("{case_id}.spec.toml"));
    std::fs::write(&spec_path, spec.to_toml_string()).map_err(|e| Error::io(&spec_path, e))?;

    Ok(FixtureFiles {
        gt: gt_path,
        pred: pred_path,
        roi: roi_path,
        graph: graph_path,
        spec: spec_path,
    })
}
