//! Segmentation metrics: Dice, centerline Dice (clDice) and Betti-0 errors,
//! for the binary task and the thirteen-class task.

mod components;
mod skeleton;

pub use components::{betti0, label_components, Components, Connectivity, Grouping};
pub use skeleton::{skeletonize, SkeletonVolume};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{merge_to_binary, LabelMap, LabelVolume, RoiBox, Vessel};

/// Which metric suite a submission is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    #[default]
    Multiclass,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" => Ok(Task::Binary),
            "multiclass" => Ok(Task::Multiclass),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Binary => "binary",
            Task::Multiclass => "multiclass",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "CTA")]
    Cta,
    #[serde(rename = "MRA")]
    Mra,
}

impl Modality {
    /// Guesses the modality from a case id such as `topcow_mr_017`.
    pub fn from_case_id(id: &str) -> Option<Self> {
        let lower = id.to_ascii_lowercase();
        let tokens: Vec<&str> = lower.split(|c: char| !c.is_ascii_alphanumeric()).collect();
        if tokens.iter().any(|t| matches!(*t, "ct" | "cta")) {
            Some(Modality::Cta)
        } else if tokens.iter().any(|t| matches!(*t, "mr" | "mra")) {
            Some(Modality::Mra)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Cta => "CTA",
            Modality::Mra => "MRA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub task: Task,
    pub connectivity: Connectivity,
}

/// Scores of one vessel class within one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub vessel: Vessel,
    /// `None` when the class is absent from both volumes.
    pub dice: Option<f64>,
    pub betti0_gt: u32,
    pub betti0_pred: u32,
    pub betti0_error: u32,
    pub gt_voxels: u64,
    pub pred_voxels: u64,
    pub overlap_voxels: u64,
}

impl ClassScore {
    pub fn present(&self) -> bool {
        self.dice.is_some()
    }
}

/// All metrics of one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub case_id: String,
    pub modality: Option<Modality>,
    pub task: Task,
    pub binary_dice: f64,
    pub binary_cldice: f64,
    pub binary_betti0_gt: u32,
    pub binary_betti0_pred: u32,
    pub binary_betti0_error: u32,
    /// Empty for the binary task.
    pub class_scores: Vec<ClassScore>,
    /// Mean over classes present in either volume; `None` for the binary task.
    pub class_avg_dice: Option<f64>,
    pub class_avg_betti0_error: Option<f64>,
}

impl CaseMetrics {
    pub fn class(&self, v: Vessel) -> Option<&ClassScore> {
        self.class_scores.iter().find(|c| c.vessel == v)
    }
}

fn dice_from_counts(a: u64, b: u64, both: u64) -> f64 {
    if a + b == 0 {
        1.0
    } else {
        2.0 * both as f64 / (a + b) as f64
    }
}

/// Dice overlap of the nonzero voxels of two masks. Two empty masks score 1.
pub fn dice(a: &LabelVolume, b: &LabelVolume) -> Result<f64> {
    a.same_grid(b)?;
    let (mut na, mut nb, mut both) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (x, y) = (x != 0, y != 0);
        na += x as u64;
        nb += y as u64;
        both += (x && y) as u64;
    }
    Ok(dice_from_counts(na, nb, both))
}

/// Dice of one class's indicator masks, or `None` if the class is in neither.
pub fn per_class_dice(gt: &LabelVolume, pred: &LabelVolume, class: u8, map: &LabelMap) -> Result<Option<f64>> {
    gt.same_grid(pred)?;
    if class == 0 || map.vessel(class).is_none() {
        return Err(Error::UnknownLabel(class));
    }
    let (mut ng, mut np, mut both) = (0u64, 0u64, 0u64);
    for (&g, &p) in gt.data().iter().zip(pred.data()) {
        let (g, p) = (g == class, p == class);
        ng += g as u64;
        np += p as u64;
        both += (g && p) as u64;
    }
    Ok((ng + np > 0).then(|| dice_from_counts(ng, np, both)))
}

fn masked_count(skel: &LabelVolume, mask: &LabelVolume) -> u64 {
    skel.data()
        .iter()
        .zip(mask.data())
        .filter(|(&s, &m)| s != 0 && m != 0)
        .count() as u64
}

fn cl_dice_from_skeletons(gt: &LabelVolume, pred: &LabelVolume, skel_gt: &SkeletonVolume, skel_pred: &SkeletonVolume) -> f64 {
    let gt_empty = gt.data().iter().all(|&v| v == 0);
    let pred_empty = pred.data().iter().all(|&v| v == 0);
    match (gt_empty, pred_empty) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let tprec = masked_count(&skel_pred.0, gt) as f64 / skel_pred.voxel_count().max(1) as f64;
    let tsens = masked_count(&skel_gt.0, pred) as f64 / skel_gt.voxel_count().max(1) as f64;
    if tprec + tsens == 0.0 {
        0.0
    } else {
        2.0 * tprec * tsens / (tprec + tsens)
    }
}

/// Centerline Dice: harmonic mean of the fraction of the predicted skeleton
/// inside the reference mask and the fraction of the reference skeleton
/// inside the predicted mask.
pub fn cl_dice(gt: &LabelVolume, pred: &LabelVolume) -> Result<f64> {
    gt.same_grid(pred)?;
    Ok(cl_dice_from_skeletons(gt, pred, &skeletonize(gt), &skeletonize(pred)))
}

/// Scores `pred` against `gt` inside `roi`.
///
/// Binary metrics use the merged (any class) masks of both volumes; for the
/// multiclass task the per-class Dice and Betti-0 errors are added, averaged
/// over classes present in at least one of the two volumes.
pub fn evaluate_case(gt: &LabelVolume, pred: &LabelVolume, roi: &RoiBox, map: &LabelMap, opts: &EvalOptions) -> Result<CaseMetrics> {
    gt.same_grid(pred)?;
    let gt = gt.crop(roi)?;
    let pred = pred.crop(roi)?;
    if opts.task == Task::Multiclass {
        gt.check_labels(map)?;
        pred.check_labels(map)?;
    }

    // One pass for all overlap counts.
    let mut gt_hist = [0u64; 256];
    let mut pred_hist = [0u64; 256];
    let mut same = [0u64; 256];
    let mut fg_both = 0u64;
    for (&g, &p) in gt.data().iter().zip(pred.data()) {
        gt_hist[g as usize] += 1;
        pred_hist[p as usize] += 1;
        if g == p {
            same[g as usize] += 1;
        }
        fg_both += (g != 0 && p != 0) as u64;
    }
    let n = gt.len() as u64;
    let binary_dice = dice_from_counts(n - gt_hist[0], n - pred_hist[0], fg_both);

    let gt_bin = merge_to_binary(&gt);
    let pred_bin = merge_to_binary(&pred);
    let binary_cldice = cl_dice_from_skeletons(&gt_bin, &pred_bin, &skeletonize(&gt_bin), &skeletonize(&pred_bin));
    let b_gt = betti0(&gt_bin, opts.connectivity) as u32;
    let b_pred = betti0(&pred_bin, opts.connectivity) as u32;

    let mut metrics = CaseMetrics {
        case_id: String::new(),
        modality: None,
        task: opts.task,
        binary_dice,
        binary_cldice,
        binary_betti0_gt: b_gt,
        binary_betti0_pred: b_pred,
        binary_betti0_error: b_gt.abs_diff(b_pred),
        class_scores: Vec::new(),
        class_avg_dice: None,
        class_avg_betti0_error: None,
    };
    if opts.task == Task::Binary {
        return Ok(metrics);
    }

    let gt_counts = label_components(&gt, opts.connectivity, Grouping::SameLabel).per_class_counts();
    let pred_counts = label_components(&pred, opts.connectivity, Grouping::SameLabel).per_class_counts();
    for (vessel, id) in map.iter() {
        let id = id as usize;
        let (g, p) = (gt_counts[id], pred_counts[id]);
        let present = gt_hist[id] + pred_hist[id] > 0;
        metrics.class_scores.push(ClassScore {
            vessel,
            dice: present.then(|| dice_from_counts(gt_hist[id], pred_hist[id], same[id])),
            betti0_gt: g,
            betti0_pred: p,
            betti0_error: g.abs_diff(p),
            gt_voxels: gt_hist[id],
            pred_voxels: pred_hist[id],
            overlap_voxels: same[id],
        });
    }
    let present: Vec<&ClassScore> = metrics.class_scores.iter().filter(|c| c.present()).collect();
    // With no class in either volume the case agrees perfectly on absence.
    let (avg_dice, avg_err) = if present.is_empty() {
        (1.0, 0.0)
    } else {
        let k = present.len() as f64;
        (
            present.iter().map(|c| c.dice.unwrap_or(0.0)).sum::<f64>() / k,
            present.iter().map(|c| c.betti0_error as f64).sum::<f64>() / k,
        )
    };
    metrics.class_avg_dice = Some(avg_dice);
    metrics.class_avg_betti0_error = Some(avg_err);
    Ok(metrics)
}
