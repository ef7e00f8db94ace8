use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::volume::{read_label_volume, LabelVolume};

/// Somewhere label volumes can be loaded from by case id.
pub trait CaseSource: Sync {
    fn case_ids(&self) -> Vec<String>;
    fn load(&self, id: &str) -> Result<Arc<LabelVolume>>;
}

/// Case id of a NIfTI file name, or `None` for other files.
pub fn case_id_of(path: &Path) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    let stem = name.strip_suffix(".nii.gz").or_else(|| name.strip_suffix(".nii"))?;
    (!stem.is_empty()).then(|| stem.to_string())
}

/// `<id>.nii` / `<id>.nii.gz` files in one directory.
#[derive(Debug, Clone)]
pub struct DirSource {
    dir: PathBuf,
    files: BTreeMap<String, PathBuf>,
}

impl DirSource {
    pub fn open(dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = BTreeMap::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if !path.is_file() {
                continue;
            }
            if let Some(id) = case_id_of(&path) {
                if let Some(prev) = files.insert(id.clone(), path.clone()) {
                    return Err(Error::Config(format!(
                        "case {id} appears twice: {} and {}",
                        prev.display(),
                        path.display()
                    )));
                }
            }
        }
        Ok(DirSource {
            dir: dir.to_path_buf(),
            files,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl CaseSource for DirSource {
    fn case_ids(&self) -> Vec<String> {
        self.files.keys().cloned().collect()
    }

    fn load(&self, id: &str) -> Result<Arc<LabelVolume>> {
        let path = self
            .files
            .get(id)
            .ok_or_else(|| Error::Config(format!("no volume for case {id} in {}", self.dir.display())))?;
        Ok(Arc::new(read_label_volume(path)?))
    }
}

/// Volumes held in memory; the same volume may back several ids.
#[derive(Debug, Clone, Default)]
pub struct MemorySource {
    volumes: BTreeMap<String, Arc<LabelVolume>>,
}

impl MemorySource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, vol: impl Into<Arc<LabelVolume>>) {
        self.volumes.insert(id.into(), vol.into());
    }
}

impl CaseSource for MemorySource {
    fn case_ids(&self) -> Vec<String> {
        self.volumes.keys().cloned().collect()
    }

    fn load(&self, id: &str) -> Result<Arc<LabelVolume>> {
        self.volumes
            .get(id)
            .cloned()
            .ok_or_else(|| Error::Config(format!("no volume for case {id}")))
    }
}

/// Sorted union of the ids of both sources.
pub fn paired_case_ids(gt: &dyn CaseSource, pred: &dyn CaseSource) -> Vec<String> {
    let ids: BTreeSet<String> = gt.case_ids().into_iter().chain(pred.case_ids()).collect();
    ids.into_iter().collect()
}

/// Loads both volumes of a case, reporting a one-sided id as an error.
pub fn load_pair(gt: &dyn CaseSource, pred: &dyn CaseSource, id: &str) -> Result<(Arc<LabelVolume>, Arc<LabelVolume>)> {
    let has = |s: &dyn CaseSource| s.case_ids().iter().any(|c| c == id);
    match (has(gt), has(pred)) {
        (true, false) => return Err(Error::Config(format!("case {id} has no prediction"))),
        (false, true) => return Err(Error::Config(format!("case {id} has no reference"))),
        _ => {}
    }
    Ok((gt.load(id)?, pred.load(id)?))
}

/// Runs `f` over `ids` on a pool of `jobs` workers and returns the outcomes
/// in the order of `ids`. Errors are kept per case.
pub fn run_cases<T, F>(ids: &[String], jobs: usize, f: F) -> Result<Vec<(String, Result<T>)>>
where
    T: Send,
    F: Fn(&str) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| ids.par_iter().map(|id| (id.clone(), f(id))).collect()))
}
