//! CoW variant diagnosis and variant topology matching.
//!
//! A prediction matches the anterior (posterior) variant of a reference only
//! if every presence, component-count and neighbourhood condition below
//! holds. Conditions that fail are reported by name.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ComponentGraph;
use crate::error::{Error, Result};
use crate::volume::Vessel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnteriorVariant {
    WithAcom,
    MissingAcom,
    ThirdA2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PosteriorVariant {
    BothPcoms,
    RPcomOnly,
    LPcomOnly,
    NoPcoms,
}

impl AnteriorVariant {
    pub const ALL: [AnteriorVariant; 3] = [AnteriorVariant::WithAcom, AnteriorVariant::MissingAcom, AnteriorVariant::ThirdA2];

    pub fn label(self) -> &'static str {
        match self {
            AnteriorVariant::WithAcom => "with Acom",
            AnteriorVariant::MissingAcom => "missing Acom",
            AnteriorVariant::ThirdA2 => "with 3rd-A2",
        }
    }
}

impl PosteriorVariant {
    pub const ALL: [PosteriorVariant; 4] = [
        PosteriorVariant::BothPcoms,
        PosteriorVariant::RPcomOnly,
        PosteriorVariant::LPcomOnly,
        PosteriorVariant::NoPcoms,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PosteriorVariant::BothPcoms => "both Pcoms",
            PosteriorVariant::RPcomOnly => "R-Pcom only",
            PosteriorVariant::LPcomOnly => "L-Pcom only",
            PosteriorVariant::NoPcoms => "no Pcoms",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariantDiagnosis {
    pub anterior: AnteriorVariant,
    pub posterior: PosteriorVariant,
}

/// Reads the anterior and posterior variant off a reference graph.
pub fn classify_variants(gt: &ComponentGraph) -> VariantDiagnosis {
    let anterior = if gt.present(Vessel::ThirdA2) {
        AnteriorVariant::ThirdA2
    } else if gt.present(Vessel::Acom) {
        AnteriorVariant::WithAcom
    } else {
        AnteriorVariant::MissingAcom
    };
    let posterior = match (gt.present(Vessel::RPcom), gt.present(Vessel::LPcom)) {
        (true, true) => PosteriorVariant::BothPcoms,
        (true, false) => PosteriorVariant::RPcomOnly,
        (false, true) => PosteriorVariant::LPcomOnly,
        (false, false) => PosteriorVariant::NoPcoms,
    };
    VariantDiagnosis { anterior, posterior }
}

/// A failed matching condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    /// Presence in the prediction differs from the reference.
    Presence(Vessel),
    /// Component count differs from the reference.
    Betti0(Vessel),
    /// A required contact with the second vessel is missing.
    Contact(Vessel, Vessel),
    /// Contact with the second vessel differs from the reference.
    Neighborhood(Vessel, Vessel),
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Presence(v) => write!(f, "{v}.presence"),
            Condition::Betti0(v) => write!(f, "{v}.betti0"),
            Condition::Contact(v, w) => write!(f, "{v}.contact({w})"),
            Condition::Neighborhood(v, w) => write!(f, "{v}.neighborhood({w})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOptions {
    /// Require communicating arteries and ACAs to meet the same-side ICA/PCA.
    pub ipsilateral: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions { ipsilateral: true }
    }
}

#[derive(Debug, Clone, Copy)]
enum Side {
    Right,
    Left,
}

impl Side {
    fn pick(self, right: Vessel, left: Vessel) -> Vessel {
        match self {
            Side::Right => right,
            Side::Left => left,
        }
    }
}

struct Matcher<'a> {
    gt: &'a ComponentGraph,
    pred: &'a ComponentGraph,
    opts: MatchOptions,
    failed: Vec<Condition>,
}

impl Matcher<'_> {
    /// Candidate neighbours: the same-side vessel, or both sides when relaxed.
    fn neighbours(&self, side: Side, right: Vessel, left: Vessel) -> Vec<Vessel> {
        if self.opts.ipsilateral {
            vec![side.pick(right, left)]
        } else {
            vec![right, left]
        }
    }

    fn touches_any(g: &ComponentGraph, v: Vessel, targets: &[Vessel]) -> bool {
        targets.iter().any(|&t| g.touches(v, t))
    }

    fn betti0(&mut self, v: Vessel) -> bool {
        if self.pred.component_count(v) != self.gt.component_count(v) {
            self.failed.push(Condition::Betti0(v));
            false
        } else {
            true
        }
    }

    /// Presence must agree; when present, the count must agree and every
    /// group of required neighbours must be touched.
    fn optional_vessel(&mut self, v: Vessel, required: &[(Vessel, Vec<Vessel>)]) {
        let in_gt = self.gt.present(v);
        if in_gt != self.pred.present(v) {
            self.failed.push(Condition::Presence(v));
            return;
        }
        if !in_gt {
            return;
        }
        self.betti0(v);
        for (name, targets) in required {
            if !Self::touches_any(self.pred, v, targets) {
                self.failed.push(Condition::Contact(v, *name));
            }
        }
    }

    /// Count must agree and contact with each neighbour group must equal the
    /// reference's.
    fn main_vessel(&mut self, v: Vessel, neighbourhood: &[(Vessel, Vec<Vessel>)]) {
        self.betti0(v);
        for (name, targets) in neighbourhood {
            let want = Self::touches_any(self.gt, v, targets);
            let got = Self::touches_any(self.pred, v, targets);
            if want != got {
                self.failed.push(Condition::Neighborhood(v, *name));
            }
        }
    }
}

/// Anterior conditions: Acom, 3rd-A2 and both ACAs.
pub fn match_anterior(gt: &ComponentGraph, pred: &ComponentGraph, opts: &MatchOptions) -> (bool, Vec<Condition>) {
    let mut m = Matcher {
        gt,
        pred,
        opts: *opts,
        failed: Vec::new(),
    };
    m.optional_vessel(
        Vessel::Acom,
        &[(Vessel::RAca, vec![Vessel::RAca]), (Vessel::LAca, vec![Vessel::LAca])],
    );
    m.optional_vessel(Vessel::ThirdA2, &[(Vessel::Acom, vec![Vessel::Acom])]);
    for side in [Side::Right, Side::Left] {
        let aca = side.pick(Vessel::RAca, Vessel::LAca);
        let ica = side.pick(Vessel::RIca, Vessel::LIca);
        let icas = m.neighbours(side, Vessel::RIca, Vessel::LIca);
        m.main_vessel(aca, &[(ica, icas), (Vessel::Acom, vec![Vessel::Acom])]);
    }
    (m.failed.is_empty(), m.failed)
}

/// Posterior conditions: both Pcoms and both PCAs.
pub fn match_posterior(gt: &ComponentGraph, pred: &ComponentGraph, opts: &MatchOptions) -> (bool, Vec<Condition>) {
    let mut m = Matcher {
        gt,
        pred,
        opts: *opts,
        failed: Vec::new(),
    };
    for side in [Side::Right, Side::Left] {
        let pcom = side.pick(Vessel::RPcom, Vessel::LPcom);
        let ica = side.pick(Vessel::RIca, Vessel::LIca);
        let pca = side.pick(Vessel::RPca, Vessel::LPca);
        let icas = m.neighbours(side, Vessel::RIca, Vessel::LIca);
        let pcas = m.neighbours(side, Vessel::RPca, Vessel::LPca);
        m.optional_vessel(pcom, &[(ica, icas), (pca, pcas)]);
    }
    for side in [Side::Right, Side::Left] {
        let pca = side.pick(Vessel::RPca, Vessel::LPca);
        let pcom = side.pick(Vessel::RPcom, Vessel::LPcom);
        let pcoms = m.neighbours(side, Vessel::RPcom, Vessel::LPcom);
        m.main_vessel(pca, &[(Vessel::Ba, vec![Vessel::Ba]), (pcom, pcoms)]);
    }
    (m.failed.is_empty(), m.failed)
}

/// Matching outcome of one case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchReport {
    pub case_id: String,
    pub anterior_matched: bool,
    pub posterior_matched: bool,
    pub anterior_failed: Vec<String>,
    pub posterior_failed: Vec<String>,
}

impl MatchReport {
    pub fn new(case_id: impl Into<String>, gt: &ComponentGraph, pred: &ComponentGraph, opts: &MatchOptions) -> Self {
        let (a, af) = match_anterior(gt, pred, opts);
        let (p, pf) = match_posterior(gt, pred, opts);
        MatchReport {
            case_id: case_id.into(),
            anterior_matched: a,
            posterior_matched: p,
            anterior_failed: af.iter().map(ToString::to_string).collect(),
            posterior_failed: pf.iter().map(ToString::to_string).collect(),
        }
    }

    /// All failed conditions, anterior first.
    pub fn failed_conditions(&self) -> Vec<&str> {
        self.anterior_failed
            .iter()
            .chain(&self.posterior_failed)
            .map(String::as_str)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRate {
    pub matched: u32,
    pub total: u32,
}

impl MatchRate {
    pub fn fraction(&self) -> f64 {
        self.matched as f64 / self.total as f64
    }
}

/// Per-variant match rates; variants without cases are left out.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchRates {
    pub anterior: BTreeMap<AnteriorVariant, MatchRate>,
    pub posterior: BTreeMap<PosteriorVariant, MatchRate>,
}

pub fn aggregate_match_rates(reports: &[MatchReport], diagnoses: &[VariantDiagnosis]) -> Result<MatchRates> {
    if reports.len() != diagnoses.len() {
        return Err(Error::Report(format!(
            "{} match reports but {} diagnoses",
            reports.len(),
            diagnoses.len()
        )));
    }
    let mut rates = MatchRates::default();
    for (r, d) in reports.iter().zip(diagnoses) {
        let a = rates.anterior.entry(d.anterior).or_default();
        a.total += 1;
        a.matched += r.anterior_matched as u32;
        let p = rates.posterior.entry(d.posterior).or_default();
        p.total += 1;
        p.matched += r.posterior_matched as u32;
    }
    Ok(rates)
}
