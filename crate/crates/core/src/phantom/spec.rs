use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Vessel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcomState {
    #[default]
    Present,
    Absent,
    /// Two separate communicating segments between the ACAs.
    Double,
}

/// State of a proximal A1 or P1 segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentState {
    #[default]
    Normal,
    /// Present but thin.
    Hypoplastic,
    /// Missing.
    Aplastic,
}

impl std::str::FromStr for SegmentState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(SegmentState::Normal),
            "hypoplastic" => Ok(SegmentState::Hypoplastic),
            "aplastic" => Ok(SegmentState::Aplastic),
            _ => Err(Error::Phantom(format!("unknown segment state {s:?}"))),
        }
    }
}

impl std::str::FromStr for AcomState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "present" => Ok(AcomState::Present),
            "absent" => Ok(AcomState::Absent),
            "double" => Ok(AcomState::Double),
            _ => Err(Error::Phantom(format!("unknown Acom state {s:?}"))),
        }
    }
}

pub const MIN_RADIUS_MM: f64 = 0.5;
pub const MAX_RADIUS_MM: f64 = 4.0;

/// Parametric description of a synthetic Circle of Willis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    /// Millimetres per voxel.
    pub spacing: [f64; 3],
    pub acom: AcomState,
    pub third_a2: bool,
    pub r_pcom: bool,
    pub l_pcom: bool,
    pub r_a1: SegmentState,
    pub l_a1: SegmentState,
    pub r_p1: SegmentState,
    pub l_p1: SegmentState,
    /// Fetal PCA: the Pcom is as wide as the PCA.
    pub r_fetal: bool,
    pub l_fetal: bool,
    /// Radius overrides in millimetres, keyed by vessel name.
    pub radii: BTreeMap<String, f64>,
    pub seed: u64,
    /// Maximum per-axis displacement of free centerline vertices, in mm.
    pub jitter_mm: f64,
}

impl Default for PhantomSpec {
    /// Complete circle: Acom, both Pcoms, no third A2, normal A1/P1.
    fn default() -> Self {
        PhantomSpec {
            dims: [128, 128, 128],
            spacing: [0.5; 3],
            acom: AcomState::Present,
            third_a2: false,
            r_pcom: true,
            l_pcom: true,
            r_a1: SegmentState::Normal,
            l_a1: SegmentState::Normal,
            r_p1: SegmentState::Normal,
            l_p1: SegmentState::Normal,
            r_fetal: false,
            l_fetal: false,
            radii: BTreeMap::new(),
            seed: 0,
            jitter_mm: 0.3,
        }
    }
}

pub(crate) fn default_radius(v: Vessel) -> f64 {
    match v {
        Vessel::Ba => 1.5,
        Vessel::RPca | Vessel::LPca => 1.1,
        Vessel::RIca | Vessel::LIca => 2.0,
        Vessel::RMca | Vessel::LMca => 1.4,
        Vessel::RPcom | Vessel::LPcom => 0.7,
        Vessel::Acom => 0.8,
        Vessel::RAca | Vessel::LAca => 1.1,
        Vessel::ThirdA2 => 0.8,
    }
}

impl PhantomSpec {
    /// Radius of a vessel in millimetres, after overrides and the fetal rule.
    pub fn radius(&self, v: Vessel) -> f64 {
        let base = self.radii.get(v.name()).copied().unwrap_or_else(|| default_radius(v));
        let fetal = match v {
            Vessel::RPcom => self.r_fetal.then(|| self.radius(Vessel::RPca)),
            Vessel::LPcom => self.l_fetal.then(|| self.radius(Vessel::LPca)),
            _ => None,
        };
        fetal.map_or(base, |f| base.max(f))
    }

    /// Radius of a thin (hypoplastic) proximal segment.
    pub fn hypoplastic_radius(&self, v: Vessel) -> f64 {
        (0.5 * self.radius(v)).max(MIN_RADIUS_MM)
    }

    pub fn acom_present(&self) -> bool {
        self.acom != AcomState::Absent
    }

    pub fn present(&self, v: Vessel) -> bool {
        match v {
            Vessel::Acom => self.acom_present(),
            Vessel::ThirdA2 => self.third_a2,
            Vessel::RPcom => self.r_pcom,
            Vessel::LPcom => self.l_pcom,
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Phantom(m));
        if self.dims.iter().any(|&d| d < 8) {
            return err(format!("grid {:?} is too small", self.dims));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return err(format!("invalid spacing {:?}", self.spacing));
        }
        for name in self.radii.keys() {
            name.parse::<Vessel>().map_err(|_| Error::Phantom(format!("unknown vessel {name:?} in radii")))?;
        }
        for (name, &r) in &self.radii {
            if !(MIN_RADIUS_MM..=MAX_RADIUS_MM).contains(&r) {
                return err(format!("radius of {name} is {r} mm, outside [{MIN_RADIUS_MM}, {MAX_RADIUS_MM}]"));
            }
        }
        if !(0.0..=1.0).contains(&self.jitter_mm) {
            return err(format!("jitter {} mm outside [0, 1]", self.jitter_mm));
        }
        if self.r_fetal && !self.r_pcom {
            return err("fetal right PCA requires the right Pcom".into());
        }
        if self.l_fetal && !self.l_pcom {
            return err("fetal left PCA requires the left Pcom".into());
        }
        if !self.acom_present() && (self.r_a1 == SegmentState::Aplastic || self.l_a1 == SegmentState::Aplastic) {
            return err("an aplastic A1 requires the Acom".into());
        }
        if self.third_a2 && self.acom != AcomState::Present {
            return err("the third A2 is modelled only with a single Acom".into());
        }
        // Every voxel along a centerline must be captured by its tube.
        let max_spacing = self.spacing.iter().cloned().fold(0.0, f64::max);
        let min_resolvable = 0.5 * 3f64.sqrt() * max_spacing;
        for v in Vessel::ALL {
            let mut r = self.radius(v);
            let thin = match v {
                Vessel::RAca => self.r_a1 == SegmentState::Hypoplastic,
                Vessel::LAca => self.l_a1 == SegmentState::Hypoplastic,
                Vessel::RPca => self.r_p1 == SegmentState::Hypoplastic,
                Vessel::LPca => self.l_p1 == SegmentState::Hypoplastic,
                _ => false,
            };
            if thin {
                r = r.min(self.hypoplastic_radius(v));
            }
            if self.present(v) && r < min_resolvable {
                return err(format!("{v} radius {r} mm is below the grid resolution ({min_resolvable:.3} mm)"));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: PhantomSpec = toml::from_str(s).map_err(|e| Error::Phantom(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("phantom spec serializes")
    }
}

/// A lattice of valid specs covering every variant toggle, used for
/// regression and acceptance runs.
pub fn spec_lattice() -> Vec<PhantomSpec> {
    let anterior = [
        (AcomState::Present, false),
        (AcomState::Absent, false),
        (AcomState::Double, false),
        (AcomState::Present, true),
    ];
    let posterior = [(true, true), (true, false), (false, true), (false, false)];
    let mut out = Vec::new();
    for (ai, &(acom, third_a2)) in anterior.iter().enumerate() {
        for (pi, &(r_pcom, l_pcom)) in posterior.iter().enumerate() {
            for variation in 0..3 {
                let mut s = PhantomSpec {
                    acom,
                    third_a2,
                    r_pcom,
                    l_pcom,
                    seed: (100 * ai + 10 * pi + variation) as u64,
                    ..PhantomSpec::default()
                };
                match variation {
                    1 => {
                        s.r_a1 = if s.acom_present() { SegmentState::Aplastic } else { SegmentState::Hypoplastic };
                        if r_pcom {
                            s.r_p1 = SegmentState::Aplastic;
                            s.r_fetal = true;
                        } else {
                            s.r_p1 = SegmentState::Hypoplastic;
                        }
                    }
                    2 => {
                        s.l_a1 = SegmentState::Hypoplastic;
                        s.l_p1 = SegmentState::Hypoplastic;
                        s.l_fetal = l_pcom;
                    }
                    _ => {}
                }
                out.push(s);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        PhantomSpec::default().validate().unwrap();
    }

    #[test]
    fn lattice_is_valid_and_covers_toggles() {
        let l = spec_lattice();
        assert!(l.len() >= 32);
        for s in &l {
            s.validate().unwrap();
        }
        assert!(l.iter().any(|s| s.acom == AcomState::Double));
        assert!(l.iter().any(|s| s.third_a2));
        assert!(l.iter().any(|s| s.r_a1 == SegmentState::Aplastic));
        assert!(l.iter().any(|s| s.l_a1 == SegmentState::Hypoplastic));
        assert!(l.iter().any(|s| s.r_p1 == SegmentState::Aplastic && s.r_fetal));
        assert!(l.iter().any(|s| s.l_p1 == SegmentState::Hypoplastic && s.l_fetal));
        assert!(l.iter().any(|s| !s.r_pcom && !s.l_pcom));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            PhantomSpec {
                r_fetal: true,
                r_pcom: false,
                ..Default::default()
            },
            PhantomSpec {
                acom: AcomState::Absent,
                l_a1: SegmentState::Aplastic,
                ..Default::default()
            },
            PhantomSpec {
                radii: [("BA".to_string(), 4.5)].into(),
                ..Default::default()
            },
            PhantomSpec {
                radii: [("XYZ".to_string(), 1.0)].into(),
                ..Default::default()
            },
            PhantomSpec {
                spacing: [2.0; 3],
                ..Default::default()
            },
        ];
        for s in bad {
            assert!(s.validate().is_err(), "{s:?}");
        }
    }

    #[test]
    fn fetal_pcom_is_as_wide_as_pca() {
        let s = PhantomSpec {
            l_fetal: true,
            ..Default::default()
        };
        assert_eq!(s.radius(Vessel::LPcom), s.radius(Vessel::LPca));
        assert_eq!(s.radius(Vessel::RPcom), default_radius(Vessel::RPcom));
    }

    #[test]
    fn toml_roundtrip() {
        let s = PhantomSpec {
            acom: AcomState::Double,
            r_p1: SegmentState::Aplastic,
            r_fetal: true,
            radii: [("BA".to_string(), 1.75)].into(),
            seed: 9,
            ..Default::default()
        };
        let back = PhantomSpec::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back, s);
        assert!(PhantomSpec::from_toml_str("bogus = 1").is_err());
    }
}
