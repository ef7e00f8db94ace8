//! Per-class detection outcomes derived from Dice.
//!
//! Dice > 0 is a true positive whatever the overlap quality; a class absent
//! from both volumes is a true negative; Dice = 0 is a false negative when
//! the reference has the class and a false positive otherwise.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ClassScore;
use crate::volume::{LabelMap, LabelVolume, Vessel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detection {
    #[serde(rename = "TP")]
    TruePositive,
    #[serde(rename = "TN")]
    TrueNegative,
    #[serde(rename = "FP")]
    FalsePositive,
    #[serde(rename = "FN")]
    FalseNegative,
}

impl fmt::Display for Detection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detection::TruePositive => "TP",
            Detection::TrueNegative => "TN",
            Detection::FalsePositive => "FP",
            Detection::FalseNegative => "FN",
        })
    }
}

/// How a class present in both volumes without any overlap is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroOverlapPolicy {
    /// Counted once, as a false negative.
    #[default]
    FalseNegative,
    /// Counted as a false negative and also as a false positive.
    FalseNegativeAndPositive,
}

/// Outcome from voxel counts of one class.
pub fn classify_detection(gt_voxels: u64, pred_voxels: u64, overlap: u64) -> Detection {
    match (gt_voxels > 0, pred_voxels > 0) {
        (false, false) => Detection::TrueNegative,
        _ if overlap > 0 => Detection::TruePositive,
        (true, _) => Detection::FalseNegative,
        (false, true) => Detection::FalsePositive,
    }
}

pub fn detect_class(gt: &LabelVolume, pred: &LabelVolume, class: u8, map: &LabelMap) -> Result<Detection> {
    gt.same_grid(pred)?;
    if class == 0 || map.vessel(class).is_none() {
        return Err(Error::UnknownLabel(class));
    }
    let (mut g, mut p, mut both) = (0u64, 0u64, 0u64);
    for (&a, &b) in gt.data().iter().zip(pred.data()) {
        g += (a == class) as u64;
        p += (b == class) as u64;
        both += (a == class && b == class) as u64;
    }
    Ok(classify_detection(g, p, both))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u32,
    pub tn: u32,
    pub fp: u32,
    #[serde(rename = "fn")]
    pub fn_: u32,
}

impl ConfusionCounts {
    pub fn total(&self) -> u32 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Fraction of correct presence/absence calls.
    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: u32, den: u32) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Detection tallies per vessel over a set of cases.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub per_class: BTreeMap<Vessel, ConfusionCounts>,
    pub policy: ZeroOverlapPolicy,
}

impl DetectionCounts {
    pub fn new(policy: ZeroOverlapPolicy) -> Self {
        DetectionCounts {
            per_class: Vessel::ALL.iter().map(|&v| (v, ConfusionCounts::default())).collect(),
            policy,
        }
    }

    /// Records one (case, class) outcome. `pred_present` matters only for
    /// false negatives under [`ZeroOverlapPolicy::FalseNegativeAndPositive`].
    pub fn record(&mut self, vessel: Vessel, outcome: Detection, pred_present: bool) {
        let c = self.per_class.entry(vessel).or_default();
        match outcome {
            Detection::TruePositive => c.tp += 1,
            Detection::TrueNegative => c.tn += 1,
            Detection::FalsePositive => c.fp += 1,
            Detection::FalseNegative => {
                c.fn_ += 1;
                if pred_present && self.policy == ZeroOverlapPolicy::FalseNegativeAndPositive {
                    c.fp += 1;
                }
            }
        }
    }

    pub fn record_scores(&mut self, scores: &[ClassScore]) {
        for s in scores {
            let outcome = classify_detection(s.gt_voxels, s.pred_voxels, s.overlap_voxels);
            self.record(s.vessel, outcome, s.pred_voxels > 0);
        }
    }

    pub fn get(&self, v: Vessel) -> ConfusionCounts {
        self.per_class.get(&v).copied().unwrap_or_default()
    }
}

/// Precision and recall per class; `None` where the denominator is zero.
pub fn precision_recall(counts: &DetectionCounts) -> BTreeMap<Vessel, (Option<f64>, Option<f64>)> {
    counts
        .per_class
        .iter()
        .map(|(&v, c)| (v, (c.precision(), c.recall())))
        .collect()
}

/// Renders an optional fraction as a percentage, or `nan` when undefined.
pub fn format_percent(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{:.1}", 100.0 * v),
        None => "nan".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_table() {
        assert_eq!(classify_detection(10, 3, 1), Detection::TruePositive);
        assert_eq!(classify_detection(0, 0, 0), Detection::TrueNegative);
        assert_eq!(classify_detection(0, 5, 0), Detection::FalsePositive);
        assert_eq!(classify_detection(5, 0, 0), Detection::FalseNegative);
        assert_eq!(classify_detection(5, 5, 0), Detection::FalseNegative);
    }

    #[test]
    fn precision_recall_examples() {
        let mut c = DetectionCounts::new(ZeroOverlapPolicy::FalseNegative);
        c.per_class.insert(Vessel::Acom, ConfusionCounts { tp: 3, ..Default::default() });
        c.per_class.insert(Vessel::RPcom, ConfusionCounts { fn_: 2, ..Default::default() });
        c.per_class.insert(Vessel::LPcom, ConfusionCounts { tp: 18, fp: 9, ..Default::default() });
        let pr = precision_recall(&c);
        assert_eq!(pr[&Vessel::Acom], (Some(1.0), Some(1.0)));
        assert_eq!(pr[&Vessel::RPcom], (None, Some(0.0)));
        let (p, r) = pr[&Vessel::LPcom];
        assert!((p.unwrap() - 18.0 / 27.0).abs() < 1e-12);
        assert_eq!(format_percent(p), "66.7");
        assert_eq!(r, Some(1.0));
        assert_eq!(format_percent(None), "nan");
    }

    #[test]
    fn zero_overlap_policy() {
        let mut strict = DetectionCounts::new(ZeroOverlapPolicy::FalseNegative);
        strict.record(Vessel::Acom, Detection::FalseNegative, true);
        assert_eq!(strict.get(Vessel::Acom), ConfusionCounts { fn_: 1, ..Default::default() });

        let mut both = DetectionCounts::new(ZeroOverlapPolicy::FalseNegativeAndPositive);
        both.record(Vessel::Acom, Detection::FalseNegative, true);
        both.record(Vessel::Acom, Detection::FalseNegative, false);
        assert_eq!(both.get(Vessel::Acom), ConfusionCounts { fn_: 2, fp: 1, ..Default::default() });
    }
}
