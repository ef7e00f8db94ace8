use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The thirteen CoW vessel components.
///
/// Declaration order follows the usual results-table column order, which is
/// also the order of the default identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Vessel {
    #[serde(rename = "BA")]
    Ba,
    #[serde(rename = "R-PCA")]
    RPca,
    #[serde(rename = "L-PCA")]
    LPca,
    #[serde(rename = "R-ICA")]
    RIca,
    #[serde(rename = "R-MCA")]
    RMca,
    #[serde(rename = "L-ICA")]
    LIca,
    #[serde(rename = "L-MCA")]
    LMca,
    #[serde(rename = "R-Pcom")]
    RPcom,
    #[serde(rename = "L-Pcom")]
    LPcom,
    #[serde(rename = "Acom")]
    Acom,
    #[serde(rename = "R-ACA")]
    RAca,
    #[serde(rename = "L-ACA")]
    LAca,
    #[serde(rename = "3rd-A2")]
    ThirdA2,
}

/// Group 1: large, almost always present arteries. Group 2: the
/// communicating arteries and the rare third A2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    Group1,
    Group2,
}

impl Vessel {
    pub const ALL: [Vessel; 13] = [
        Vessel::Ba,
        Vessel::RPca,
        Vessel::LPca,
        Vessel::RIca,
        Vessel::RMca,
        Vessel::LIca,
        Vessel::LMca,
        Vessel::RPcom,
        Vessel::LPcom,
        Vessel::Acom,
        Vessel::RAca,
        Vessel::LAca,
        Vessel::ThirdA2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Vessel::Ba => "BA",
            Vessel::RPca => "R-PCA",
            Vessel::LPca => "L-PCA",
            Vessel::RIca => "R-ICA",
            Vessel::RMca => "R-MCA",
            Vessel::LIca => "L-ICA",
            Vessel::LMca => "L-MCA",
            Vessel::RPcom => "R-Pcom",
            Vessel::LPcom => "L-Pcom",
            Vessel::Acom => "Acom",
            Vessel::RAca => "R-ACA",
            Vessel::LAca => "L-ACA",
            Vessel::ThirdA2 => "3rd-A2",
        }
    }

    pub fn group(self) -> Group {
        match self {
            Vessel::RPcom | Vessel::LPcom | Vessel::Acom | Vessel::ThirdA2 => Group::Group2,
            _ => Group::Group1,
        }
    }
}

impl fmt::Display for Vessel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Vessel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Vessel::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::LabelMap(format!("unknown vessel name {s:?}")))
    }
}

/// Bijection between the thirteen vessels and nonzero 8-bit identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    ids: [u8; 13],
    by_id: [Option<Vessel>; 256],
}

/// On-disk form: a `[labels]` table of vessel name to identifier.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub(crate) struct LabelTable {
    #[serde(default)]
    pub labels: BTreeMap<String, i64>,
}

impl Default for LabelMap {
    /// BA, R-PCA, ... L-ACA take 1..=12; the third A2 takes 15.
    fn default() -> Self {
        let mut ids = [0u8; 13];
        for (i, id) in ids.iter_mut().enumerate().take(12) {
            *id = i as u8 + 1;
        }
        ids[12] = 15;
        Self::from_ids(ids).expect("default label map is valid")
    }
}

impl LabelMap {
    fn from_ids(ids: [u8; 13]) -> Result<Self> {
        let mut by_id = [None; 256];
        for (v, &id) in Vessel::ALL.iter().zip(&ids) {
            if id == 0 {
                return Err(Error::LabelMap(format!("{v} uses reserved identifier 0")));
            }
            if let Some(prev) = by_id[id as usize] {
                return Err(Error::LabelMap(format!("{v} and {prev} share identifier {id}")));
            }
            by_id[id as usize] = Some(*v);
        }
        Ok(LabelMap { ids, by_id })
    }

    /// Builds a map from (name, identifier) pairs. All thirteen vessels must
    /// appear exactly once.
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, i64)>) -> Result<Self> {
        let mut ids: [Option<u8>; 13] = [None; 13];
        let mut count = 0usize;
        for (name, id) in entries {
            count += 1;
            let v: Vessel = name.parse()?;
            if !(1..=255).contains(&id) {
                return Err(Error::LabelMap(format!("{v}: identifier {id} outside 1..=255")));
            }
            let slot = &mut ids[v as usize];
            if slot.is_some() {
                return Err(Error::LabelMap(format!("{v} listed twice")));
            }
            *slot = Some(id as u8);
        }
        if count != 13 {
            return Err(Error::LabelMap(format!("expected 13 entries, found {count}")));
        }
        let mut out = [0u8; 13];
        for (i, id) in ids.iter().enumerate() {
            out[i] = id.ok_or_else(|| Error::LabelMap(format!("missing class {}", Vessel::ALL[i])))?;
        }
        Self::from_ids(out)
    }

    pub(crate) fn from_table(table: &LabelTable) -> Result<Self> {
        Self::from_entries(table.labels.iter().map(|(k, &v)| (k.as_str(), v)))
    }

    pub(crate) fn to_table(&self) -> LabelTable {
        LabelTable {
            labels: self.iter().map(|(v, id)| (v.name().to_string(), id as i64)).collect(),
        }
    }

    /// Parses a TOML document with a `[labels]` table.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let table: LabelTable = toml::from_str(s).map_err(|e| Error::LabelMap(e.to_string()))?;
        Self::from_table(&table)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_table()).expect("label table serializes")
    }

    pub fn id(&self, v: Vessel) -> u8 {
        self.ids[v as usize]
    }

    pub fn vessel(&self, id: u8) -> Option<Vessel> {
        self.by_id[id as usize]
    }

    pub fn name(&self, id: u8) -> Option<&'static str> {
        self.vessel(id).map(Vessel::name)
    }

    pub fn group_of(&self, id: u8) -> Option<Group> {
        self.vessel(id).map(Vessel::group)
    }

    pub fn len(&self) -> usize {
        13
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Entries in vessel order.
    pub fn iter(&self) -> impl Iterator<Item = (Vessel, u8)> + '_ {
        Vessel::ALL.iter().map(move |&v| (v, self.id(v)))
    }

    pub fn vessels_in(&self, group: Group) -> impl Iterator<Item = Vessel> {
        Vessel::ALL.into_iter().filter(move |v| v.group() == group)
    }
}

/// Loads a label map from a TOML file, or the built-in default for `None`.
pub fn load_label_map(path: Option<&Path>) -> Result<LabelMap> {
    match path {
        None => Ok(LabelMap::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            LabelMap::from_toml_str(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_entries() -> Vec<(&'static str, i64)> {
        LabelMap::default().iter().map(|(v, id)| (v.name(), id as i64)).collect()
    }

    #[test]
    fn default_map_has_thirteen_classes_and_four_group2() {
        let m = load_label_map(None).unwrap();
        assert_eq!(m.iter().count(), 13);
        let g2: Vec<_> = m.vessels_in(Group::Group2).collect();
        assert_eq!(g2, vec![Vessel::RPcom, Vessel::LPcom, Vessel::Acom, Vessel::ThirdA2]);
        assert_eq!(m.vessels_in(Group::Group1).count(), 9);
        assert_eq!(m.id(Vessel::Ba), 1);
        assert_eq!(m.id(Vessel::LAca), 12);
        assert_eq!(m.vessel(15), Some(Vessel::ThirdA2));
    }

    #[test]
    fn remap_echoes_config() {
        let mut e = default_entries();
        e[12].1 = 13;
        let m = LabelMap::from_entries(e.iter().copied()).unwrap();
        assert_eq!(m.name(13), Some("3rd-A2"));
        assert_eq!(m.vessel(15), None);

        let toml = "[labels]\nBA = 1\n\"R-PCA\" = 2\n\"L-PCA\" = 3\n\"R-ICA\" = 4\n\"R-MCA\" = 5\n\
                    \"L-ICA\" = 6\n\"L-MCA\" = 7\n\"R-Pcom\" = 8\n\"L-Pcom\" = 9\nAcom = 10\n\
                    \"R-ACA\" = 11\n\"L-ACA\" = 12\n\"3rd-A2\" = 15\n";
        let m = LabelMap::from_toml_str(toml).unwrap();
        assert_eq!(m.name(15), Some("3rd-A2"));
        assert_eq!(m, LabelMap::default());
    }

    #[test]
    fn rejects_bad_maps() {
        let e = default_entries();
        assert!(LabelMap::from_entries(e[..12].iter().copied()).is_err());

        let mut dup = e.clone();
        dup[1].1 = 1;
        assert!(LabelMap::from_entries(dup).is_err());

        let mut zero = e.clone();
        zero[0].1 = 0;
        assert!(LabelMap::from_entries(zero).is_err());

        let mut big = e.clone();
        big[0].1 = 256;
        assert!(LabelMap::from_entries(big).is_err());

        let mut twice = e.clone();
        twice[12].0 = "BA";
        assert!(LabelMap::from_entries(twice).is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let m = LabelMap::default();
        assert_eq!(LabelMap::from_toml_str(&m.to_toml_string()).unwrap(), m);
    }
}
