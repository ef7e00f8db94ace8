//! Topology-aware evaluation of multiclass Circle of Willis (CoW) vessel
//! segmentations.
//!
//! The crate is organised bottom-up:
//!
//! * [`volume`] reads and writes NIfTI-1 label volumes, crops them to a region
//!   of interest and defines the thirteen-class label map.
//! * [`metrics`] holds the voxel kernels: Dice, skeletonization, clDice and
//!   connected-component counting (Betti-0), plus the per-case evaluation.
//! * [`topology`] extracts component adjacency graphs and runs the detection
//!   and variant topology matching analyses.
//! * [`phantom`] synthesizes CoW label volumes with known topology and applies
//!   corruptions that mimic common segmentation failures.
//! * [`harness`] drives batch evaluation, leaderboard ranking and report
//!   serialization for the command-line tool.

pub mod error;
pub mod harness;
pub mod metrics;
pub mod phantom;
pub mod topology;
pub mod volume;

pub use error::{Error, Result};


pub use metrics::{CaseMetrics, ClassScore, Connectivity, EvalOptions, Task};
pub use topology::{ComponentGraph, MatchReport, VariantDiagnosis};
pub use volume::{LabelMap, LabelVolume, RoiBox, Vessel, Volume};
