//! Batch evaluation and the per-case report formats.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::cases::{load_pair, paired_case_ids, run_cases, CaseSource};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_case, CaseMetrics, EvalOptions};
use crate::volume::{LabelMap, RoiBox};

pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of one case: metrics, or the error that stopped it.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord {
    pub case_id: String,
    pub result: std::result::Result<CaseMetrics, String>,
}

impl CaseRecord {
    pub fn is_ok(&self) -> bool {
        self.result.is_ok()
    }

    pub fn metrics(&self) -> Option<&CaseMetrics> {
        self.result.as_ref().ok()
    }

    /// One flat JSON object with a key per metric; per-class values use
    /// `<metric>.<vessel>` keys.
    pub fn flat(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("case_id".into(), json!(self.case_id));
        let metrics = match &self.result {
            Ok(m) => m,
            Err(e) => {
                m.insert("status".into(), json!("error"));
                m.insert("error".into(), json!(e));
                return m;
            }
        };
        m.insert("status".into(), json!("ok"));
        m.insert("task".into(), json!(metrics.task));
        m.insert("modality".into(), json!(metrics.modality.map(|x| x.as_str())));
        m.insert("binary_dice".into(), json!(metrics.binary_dice));
        m.insert("binary_cldice".into(), json!(metrics.binary_cldice));
        m.insert("binary_betti0_gt".into(), json!(metrics.binary_betti0_gt));
        m.insert("binary_betti0_pred".into(), json!(metrics.binary_betti0_pred));
        m.insert("binary_betti0_error".into(), json!(metrics.binary_betti0_error));
        if metrics.class_avg_dice.is_some() {
            m.insert("class_avg_dice".into(), json!(metrics.class_avg_dice));
            m.insert("class_avg_betti0_error".into(), json!(metrics.class_avg_betti0_error));
        }
        for c in &metrics.class_scores {
            let v = c.vessel.name();
            m.insert(format!("dice.{v}"), json!(c.dice));
            m.insert(format!("betti0_gt.{v}"), json!(c.betti0_gt));
            m.insert(format!("betti0_pred.{v}"), json!(c.betti0_pred));
            m.insert(format!("betti0_error.{v}"), json!(c.betti0_error));
            m.insert(format!("gt_voxels.{v}"), json!(c.gt_voxels));
            m.insert(format!("pred_voxels.{v}"), json!(c.pred_voxels));
            m.insert(format!("overlap_voxels.{v}"), json!(c.overlap_voxels));
        }
        m
    }
}

/// Evaluates every case id found in either source on `jobs` workers.
/// Failures are recorded per case; the result is sorted by case id.
pub fn evaluate_batch(
    gt: &dyn CaseSource,
    pred: &dyn CaseSource,
    rois: Option<&BTreeMap<String, RoiBox>>,
    map: &LabelMap,
    opts: &EvalOptions,
    jobs: usize,
) -> Result<Vec<CaseRecord>> {
    let ids = paired_case_ids(gt, pred);
    let outcomes = run_cases(&ids, jobs, |id| {
        let (g, p) = load_pair(gt, pred, id)?;
        let roi = match rois {
            None => RoiBox::whole(g.dims()),
            Some(r) => *r
                .get(id)
                .ok_or_else(|| Error::Config(format!("case {id} has no ROI record")))?,
        };
        evaluate_case(&g, &p, &roi, map, opts).map(|mut m| {
            m.case_id = id.to_string();
            m
        })
    })?;
    Ok(outcomes
        .into_iter()
        .map(|(case_id, r)| CaseRecord {
            case_id,
            result: r.map_err(|e| e.to_string()),
        })
        .collect())
}

/// Mean and population standard deviation of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Some(Aggregate {
            mean,
            std: var.sqrt(),
            n,
        })
    }
}

const NON_METRIC_KEYS: [&str; 5] = ["case_id", "status", "error", "task", "modality"];

/// Mean ± std of every numeric column over successful records; null values
/// (classes absent from both volumes) are skipped.
pub fn aggregate_columns(records: &[Map<String, Value>]) -> BTreeMap<String, Aggregate> {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        if r.get("status").and_then(Value::as_str) != Some("ok") {
            continue;
        }
        for (k, v) in r {
            if NON_METRIC_KEYS.contains(&k.as_str()) {
                continue;
            }
            let col = columns.entry(k.clone()).or_default();
            if let Some(x) = v.as_f64() {
                col.push(x);
            }
        }
    }
    columns
        .into_iter()
        .filter_map(|(k, vals)| Aggregate::of(&vals).map(|a| (k, a)))
        .collect()
}

/// Machine-readable evaluation report.
pub fn report_json(records: &[CaseRecord], opts: &EvalOptions) -> Value {
    let flat: Vec<Map<String, Value>> = records.iter().map(CaseRecord::flat).collect();
    let aggregates = aggregate_columns(&flat);
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    json!({
        "schema_version": SCHEMA_VERSION,
        "task": opts.task,
        "connectivity": opts.connectivity,
        "case_count": records.len(),
        "failed_count": failed,
        "cases": flat,
        "aggregates": aggregates,
    })
}

/// Pretty JSON with a trailing newline; byte-stable for identical input.
pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => "nan".into(),
        Some(Value::String(s)) => s.split_whitespace().collect::<Vec<_>>().join(" "),
        Some(v) => v.to_string(),
    }
}

/// Tab-separated table, one row per case; missing and null cells read `nan`.
pub fn report_table(records: &[CaseRecord]) -> String {
    let flat: Vec<Map<String, Value>> = records.iter().map(CaseRecord::flat).collect();
    let mut keys: Vec<String> = vec!["case_id".into(), "status".into()];
    let mut rest: Vec<String> = flat
        .iter()
        .flat_map(|r| r.keys().cloned())
        .filter(|k| k != "case_id" && k != "status")
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    keys.append(&mut rest);
    let mut out = keys.join("\t");
    out.push('\n');
    for r in &flat {
        let row: Vec<String> = keys.iter().map(|k| cell(r.get(k))).collect();
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

/// Per-case flat records and aggregates read back from a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub schema_version: u32,
    pub cases: Vec<Map<String, Value>>,
    pub aggregates: BTreeMap<String, Aggregate>,
}

pub fn parse_report(text: &str) -> Result<ParsedReport> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))?;
    let version = v
        .get("schema_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Report("missing schema_version".into()))? as u32;
    if version != SCHEMA_VERSION {
        return Err(Error::Report(format!("unsupported schema version {version}")));
    }
    let cases = v
        .get("cases")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Report("missing cases".into()))?
        .iter()
        .map(|c| c.as_object().cloned().ok_or_else(|| Error::Report("case record is not an object".into())))
        .collect::<Result<Vec<_>>>()?;
    let aggregates = match v.get("aggregates") {
        Some(a) => serde_json::from_value(a.clone()).map_err(|e| Error::Report(e.to_string()))?,
        None => aggregate_columns(&cases),
    };
    Ok(ParsedReport {
        schema_version: version,
        cases,
        aggregates,
    })
}
