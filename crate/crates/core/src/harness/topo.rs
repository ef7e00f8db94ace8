//! Batch detection and variant-matching report.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::cases::{load_pair, paired_case_ids, run_cases, CaseSource};
use super::config::Config;
use super::report::Aggregate;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_case, ClassScore, EvalOptions, Task};
use crate::topology::{
    aggregate_match_rates, classify_variants, extract_component_graph, format_percent, precision_recall, DetectionCounts,
    MatchRates, MatchReport, VariantDiagnosis,
};
use crate::volume::{Group, LabelMap, RoiBox, Vessel};

/// Topology analysis of one case.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseTopology {
    pub case_id: String,
    pub scores: Vec<ClassScore>,
    pub diagnosis: VariantDiagnosis,
    pub matching: MatchReport,
}

pub fn analyze_case(
    case_id: &str,
    gt: &crate::volume::LabelVolume,
    pred: &crate::volume::LabelVolume,
    roi: &RoiBox,
    map: &LabelMap,
    cfg: &Config,
) -> Result<CaseTopology> {
    let opts = EvalOptions {
        task: Task::Multiclass,
        connectivity: cfg.connectivity,
    };
    let metrics = evaluate_case(gt, pred, roi, map, &opts)?;
    let (g, p) = (gt.crop(roi)?, pred.crop(roi)?);
    let gg = extract_component_graph(&g, map, &cfg.graph_options())?;
    let pg = extract_component_graph(&p, map, &cfg.graph_options())?;
    Ok(CaseTopology {
        case_id: case_id.to_string(),
        scores: metrics.class_scores,
        diagnosis: classify_variants(&gg),
        matching: MatchReport::new(case_id, &gg, &pg, &cfg.match_options()),
    })
}

/// Analyses every case of the two sources; failures are kept per case.
pub fn analyze_batch(
    gt: &dyn CaseSource,
    pred: &dyn CaseSource,
    rois: Option<&BTreeMap<String, RoiBox>>,
    map: &LabelMap,
    cfg: &Config,
    jobs: usize,
) -> Result<Vec<(String, Result<CaseTopology>)>> {
    let ids = paired_case_ids(gt, pred);
    run_cases(&ids, jobs, |id| {
        let (g, p) = load_pair(gt, pred, id)?;
        let roi = match rois {
            None => RoiBox::whole(g.dims()),
            Some(r) => *r
                .get(id)
                .ok_or_else(|| Error::Config(format!("case {id} has no ROI record")))?,
        };
        analyze_case(id, &g, &p, &roi, map, cfg)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyReport {
    pub case_count: usize,
    pub failed: Vec<(String, String)>,
    pub detection: DetectionCounts,
    pub matches: Vec<MatchReport>,
    pub diagnoses: Vec<VariantDiagnosis>,
    pub rates: MatchRates,
    /// Mean Dice over every (case, class) pair of the group where the class
    /// is present in either volume.
    pub group_dice: BTreeMap<Group, Option<Aggregate>>,
}

impl TopologyReport {
    pub fn build(outcomes: Vec<(String, Result<CaseTopology>)>, cfg: &Config) -> Result<Self> {
        let case_count = outcomes.len();
        let mut failed = Vec::new();
        let mut detection = DetectionCounts::new(cfg.zero_overlap);
        let mut matches = Vec::new();
        let mut diagnoses = Vec::new();
        let mut dice: BTreeMap<Group, Vec<f64>> = BTreeMap::new();
        for (id, r) in outcomes {
            match r {
                Err(e) => failed.push((id, e.to_string())),
                Ok(t) => {
                    detection.record_scores(&t.scores);
                    for s in &t.scores {
                        if let Some(d) = s.dice {
                            dice.entry(s.vessel.group()).or_default().push(d);
                        }
                    }
                    matches.push(t.matching);
                    diagnoses.push(t.diagnosis);
                }
            }
        }
        let rates = aggregate_match_rates(&matches, &diagnoses)?;
        let group_dice = [Group::Group1, Group::Group2]
            .into_iter()
            .map(|g| (g, dice.get(&g).and_then(|v| Aggregate::of(v))))
            .collect();
        Ok(TopologyReport {
            case_count,
            failed,
            detection,
            matches,
            diagnoses,
            rates,
            group_dice,
        })
    }

    pub fn has_failures(&self) -> bool {
        !self.failed.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let pr = precision_recall(&self.detection);
        let detection: serde_json::Map<String, Value> = self
            .detection
            .per_class
            .iter()
            .map(|(v, c)| {
                let (p, r) = pr[v];
                (
                    v.name().to_string(),
                    json!({
                        "tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn_,
                        "precision": format_percent(p),
                        "recall": format_percent(r),
                    }),
                )
            })
            .collect();
        let rate = |r: &crate::topology::MatchRate| {
            json!({ "matched": r.matched, "total": r.total, "percent": format_percent(Some(r.fraction())) })
        };
        let anterior: serde_json::Map<String, Value> =
            self.rates.anterior.iter().map(|(v, r)| (v.label().to_string(), rate(r))).collect();
        let posterior: serde_json::Map<String, Value> =
            self.rates.posterior.iter().map(|(v, r)| (v.label().to_string(), rate(r))).collect();
        let groups: serde_json::Map<String, Value> = self
            .group_dice
            .iter()
            .map(|(g, a)| {
                let key = match g {
                    Group::Group1 => "group1",
                    Group::Group2 => "group2",
                };
                (key.to_string(), json!(a))
            })
            .collect();
        let cases: Vec<Value> = self
            .matches
            .iter()
            .zip(&self.diagnoses)
            .map(|(m, d)| {
                json!({
                    "case_id": m.case_id,
                    "anterior_variant": d.anterior.label(),
                    "posterior_variant": d.posterior.label(),
                    "anterior_matched": m.anterior_matched,
                    "posterior_matched": m.posterior_matched,
                    "failed_conditions": m.failed_conditions(),
                })
            })
            .collect();
        let failed: Vec<Value> = self.failed.iter().map(|(id, e)| json!({ "case_id": id, "error": e })).collect();
        json!({
            "schema_version": super::report::SCHEMA_VERSION,
            "case_count": self.case_count,
            "zero_overlap": self.detection.policy,
            "detection": detection,
            "match_rates": { "anterior": anterior, "posterior": posterior },
            "group_dice": groups,
            "cases": cases,
            "failed": failed,
        })
    }

    /// Plain-text summary tables.
    pub fn to_text(&self) -> String {
        let pr = precision_recall(&self.detection);
        let mut s = String::from("class\tTP\tTN\tFP\tFN\tprecision\trecall\n");
        for v in Vessel::ALL {
            let c = self.detection.get(v);
            let (p, r) = pr.get(&v).copied().unwrap_or((None, None));
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                v.name(),
                c.tp,
                c.tn,
                c.fp,
                c.fn_,
                format_percent(p),
                format_percent(r)
            ));
        }
        s.push_str("\nvariant\tmatched\ttotal\tpercent\n");
        for (v, r) in &self.rates.anterior {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", v.label(), r.matched, r.total, format_percent(Some(r.fraction()))));
        }
        for (v, r) in &self.rates.posterior {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", v.label(), r.matched, r.total, format_percent(Some(r.fraction()))));
        }
        s.push_str("\ngroup\tmean_dice\tstd\tn\n");
        for (g, a) in &self.group_dice {
            let name = match g {
                Group::Group1 => "group1",
                Group::Group2 => "group2",
            };
            match a {
                Some(a) => s.push_str(&format!("{name}\t{:.4}\t{:.4}\t{}\n", a.mean, a.std, a.n)),
                None => s.push_str(&format!("{name}\tnan\tnan\t0\n")),
            }
        }
        for (id, e) in &self.failed {
            s.push_str(&format!("\nfailed\t{id}\t{e}"));
        }
        if !self.failed.is_empty() {
            s.push('\n');
        }
        s
    }
}
