use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Connectivity, EvalOptions, Task};
use crate::topology::{GraphOptions, MatchOptions, ZeroOverlapPolicy};
use crate::volume::LabelMap;

/// Evaluation settings, read from a TOML file such as
///
/// ```toml
/// task = "multiclass"
/// connectivity = 26
/// adjacency = 26
/// ipsilateral = true
/// zero_overlap = "false-negative"
///
/// [labels]
/// BA = 1
/// # ...
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub task: Task,
    pub connectivity: Connectivity,
    pub adjacency: Connectivity,
    pub ipsilateral: bool,
    pub zero_overlap: ZeroOverlapPolicy,
    /// Label id per vessel name; the default mapping when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, i64>>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            task: Task::Multiclass,
            connectivity: Connectivity::TwentySix,
            adjacency: Connectivity::TwentySix,
            ipsilateral: true,
            zero_overlap: ZeroOverlapPolicy::FalseNegative,
            labels: None,
        }
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.label_map()?;
        Ok(cfg)
    }

    /// Reads `path`, or returns the defaults when `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Config::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn label_map(&self) -> Result<LabelMap> {
        match &self.labels {
            None => Ok(LabelMap::default()),
            Some(t) => LabelMap::from_entries(t.iter().map(|(k, &v)| (k.as_str(), v))),
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            task: self.task,
            connectivity: self.connectivity,
        }
    }

    pub fn graph_options(&self) -> GraphOptions {
        GraphOptions {
            connectivity: self.connectivity,
            adjacency: self.adjacency,
        }
    }

    pub fn match_options(&self) -> MatchOptions {
        MatchOptions {
            ipsilateral: self.ipsilateral,
        }
    }
}
