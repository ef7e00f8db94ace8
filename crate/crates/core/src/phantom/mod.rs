//! Synthetic circles of Willis with known topology, and corruption
//! operators that perturb them in controlled ways.

mod corruption;
mod geometry;
mod spec;

pub use corruption::{apply_corruption, apply_corruptions, corruption_support, Corruption};
pub use geometry::{expected_graph, generate_phantom, Phantom, ROI_MARGIN};
pub use spec::{spec_lattice, AcomState, PhantomSpec, SegmentState, MAX_RADIUS_MM, MIN_RADIUS_MM};
