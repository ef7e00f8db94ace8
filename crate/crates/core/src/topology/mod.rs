//! Component adjacency graphs and the analyses built on them: per-class
//! detection and CoW variant topology matching.

mod detection;
mod graph;
mod matching;

pub use detection::{
    classify_detection, detect_class, format_percent, precision_recall, ConfusionCounts, Detection, DetectionCounts,
    ZeroOverlapPolicy,
};
pub use graph::{extract_component_graph, ComponentGraph, ComponentNode, GraphOptions, GraphShape, NodeId};
pub use matching::{
    aggregate_match_rates, classify_variants, match_anterior, match_posterior, AnteriorVariant, Condition, MatchOptions,
    MatchRate, MatchRates, MatchReport, PosteriorVariant, VariantDiagnosis,
};
