//! Tube templates for the synthetic circle.
//!
//! Coordinates are millimetres in the LPS frame (x towards the left, y towards
//! the posterior, z towards the superior), roughly centred on the circle.
//! Junctions are placed on polyline vertices that are never jittered, and
//! the owner of a junction sphere is the vessel every branch attaches to.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::{AcomState, PhantomSpec, SegmentState};
use crate::error::{Error, Result};
use crate::topology::{ComponentGraph, ComponentNode, NodeId};
use crate::volume::{LabelMap, LabelVolume, RoiBox, Vessel, Volume};

/// Voxels of background kept around the vessels in the ROI.
pub const ROI_MARGIN: usize = 2;
/// Non-adjacent classes must be further apart than this Chebyshev distance.
const MIN_GAP_VOXELS: i64 = 2;
const HUB_EXTRA_MM: f64 = 1.5;

type P = [f64; 3];

#[derive(Debug, Clone)]
pub(crate) struct Tube {
    pub node: NodeId,
    pub points: Vec<P>,
    /// One radius per segment.
    pub radii: Vec<f64>,
    /// Vertices that may be jittered.
    pub free: Vec<bool>,
}

#[derive(Debug, Clone)]
pub(crate) struct Hub {
    pub node: NodeId,
    pub center: P,
    pub radius: f64,
}

/// Tubes in paint order (later wins), followed by hubs.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub tubes: Vec<Tube>,
    pub hubs: Vec<Hub>,
}

fn side(v: Vessel) -> f64 {
    match v {
        Vessel::RPca | Vessel::RIca | Vessel::RMca | Vessel::RPcom | Vessel::RAca => -1.0,
        _ => 1.0,
    }
}

fn node(v: Vessel) -> NodeId {
    NodeId::new(v, 0)
}

fn tube(v: Vessel, points: Vec<P>, radii: Vec<f64>, free: Vec<bool>) -> Tube {
    debug_assert_eq!(points.len(), radii.len() + 1);
    debug_assert_eq!(points.len(), free.len());
    Tube {
        node: node(v),
        points,
        radii,
        free,
    }
}

fn ica_top(s: f64) -> P {
    [12.0 * s, 0.0, 3.0]
}
fn pcom_origin(s: f64) -> P {
    [12.0 * s, 2.0, -4.0]
}
fn aca_junction(s: f64) -> P {
    [4.0 * s, -8.0, 4.0]
}
fn aca_second_junction(s: f64) -> P {
    [4.6 * s, -11.6, 8.8]
}
fn pca_junction(s: f64) -> P {
    [8.0 * s, 12.0, -1.0]
}
const BA_TOP: P = [0.0, 14.0, -2.0];

fn segment_state(spec: &PhantomSpec, v: Vessel) -> SegmentState {
    match v {
        Vessel::RAca => spec.r_a1,
        Vessel::LAca => spec.l_a1,
        Vessel::RPca => spec.r_p1,
        Vessel::LPca => spec.l_p1,
        _ => SegmentState::Normal,
    }
}

pub(crate) fn layout(spec: &PhantomSpec) -> Layout {
    let mut tubes = Vec::new();
    let r = |v| spec.radius(v);

    if spec.third_a2 {
        tubes.push(tube(
            Vessel::ThirdA2,
            vec![[0.0, -8.0, 4.0], [0.0, -12.0, 11.0], [0.0, -15.0, 21.0]],
            vec![r(Vessel::ThirdA2); 2],
            vec![false, true, true],
        ));
    }
    if spec.acom_present() {
        tubes.push(tube(Vessel::Acom, vec![aca_junction(-1.0), aca_junction(1.0)], vec![r(Vessel::Acom)], vec![false, false]));
    }
    if spec.acom == AcomState::Double {
        let mut t = tube(
            Vessel::Acom,
            vec![aca_second_junction(-1.0), aca_second_junction(1.0)],
            vec![r(Vessel::Acom)],
            vec![false, false],
        );
        t.node.index = 1;
        tubes.push(t);
    }
    for (v, present) in [(Vessel::RPcom, spec.r_pcom), (Vessel::LPcom, spec.l_pcom)] {
        if present {
            let s = side(v);
            tubes.push(tube(
                v,
                vec![pcom_origin(s), [10.0 * s, 7.0, -2.5], pca_junction(s)],
                vec![r(v); 2],
                vec![false, true, false],
            ));
        }
    }
    for v in [Vessel::RAca, Vessel::LAca] {
        let s = side(v);
        let distal = [
            aca_junction(s),
            aca_second_junction(s),
            [5.0 * s, -14.0, 12.0],
            [5.0 * s, -16.0, 22.0],
        ];
        let t = match segment_state(spec, v) {
            SegmentState::Aplastic => tube(v, distal.to_vec(), vec![r(v); 3], vec![false, false, true, true]),
            state => {
                let a1 = if state == SegmentState::Hypoplastic { spec.hypoplastic_radius(v) } else { r(v) };
                let mut points = vec![ica_top(s)];
                points.extend(distal);
                tube(v, points, vec![a1, r(v), r(v), r(v)], vec![false, false, false, true, true])
            }
        };
        tubes.push(t);
    }
    for v in [Vessel::RMca, Vessel::LMca] {
        let s = side(v);
        tubes.push(tube(
            v,
            vec![ica_top(s), [19.0 * s, -1.0, 4.0], [26.0 * s, 0.0, 6.0]],
            vec![r(v); 2],
            vec![false, true, true],
        ));
    }
    for v in [Vessel::RPca, Vessel::LPca] {
        let s = side(v);
        let distal = [pca_junction(s), [15.0 * s, 17.0, 1.0], [19.0 * s, 25.0, 3.0]];
        let t = match segment_state(spec, v) {
            SegmentState::Aplastic => tube(v, distal.to_vec(), vec![r(v); 2], vec![false, true, true]),
            state => {
                let p1 = if state == SegmentState::Hypoplastic { spec.hypoplastic_radius(v) } else { r(v) };
                let mut points = vec![BA_TOP];
                points.extend(distal);
                tube(v, points, vec![p1, r(v), r(v)], vec![false, false, true, true])
            }
        };
        tubes.push(t);
    }
    for v in [Vessel::RIca, Vessel::LIca] {
        let s = side(v);
        tubes.push(tube(
            v,
            vec![[12.0 * s, 5.0, -20.0], [12.0 * s, 3.0, -10.0], pcom_origin(s), ica_top(s)],
            vec![r(v); 3],
            vec![true, true, false, false],
        ));
    }
    tubes.push(tube(
        Vessel::Ba,
        vec![[0.0, 14.0, -20.0], [0.0, 14.0, -10.0], BA_TOP],
        vec![r(Vessel::Ba); 2],
        vec![true, true, false],
    ));

    let mut hubs = Vec::new();
    for v in [Vessel::RIca, Vessel::LIca] {
        hubs.push(Hub {
            node: node(v),
            center: ica_top(side(v)),
            radius: r(v) + HUB_EXTRA_MM,
        });
    }
    hubs.push(Hub {
        node: node(Vessel::Ba),
        center: BA_TOP,
        radius: r(Vessel::Ba) + HUB_EXTRA_MM,
    });

    let mut layout = Layout { tubes, hubs };
    jitter(&mut layout, spec);
    layout
}

fn jitter(layout: &mut Layout, spec: &PhantomSpec) {
    if spec.jitter_mm <= 0.0 {
        return;
    }
    for t in &mut layout.tubes {
        let stream = (t.node.vessel as u64) << 8 | t.node.index as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        for (p, &free) in t.points.iter_mut().zip(&t.free) {
            if free {
                for c in p.iter_mut() {
                    *c += rng.gen_range(-spec.jitter_mm..=spec.jitter_mm);
                }
            }
        }
    }
}

/// Graph the spec is expected to produce, derived from the toggles alone.
pub fn expected_graph(spec: &PhantomSpec) -> Result<ComponentGraph> {
    spec.validate()?;
    let mut nodes: Vec<NodeId> = Vessel::ALL.iter().filter(|&&v| spec.present(v)).map(|&v| node(v)).collect();
    let mut edges = Vec::new();
    for (s, ica, mca, aca, pcom, pca) in [
        (spec.r_pcom, Vessel::RIca, Vessel::RMca, Vessel::RAca, Vessel::RPcom, Vessel::RPca),
        (spec.l_pcom, Vessel::LIca, Vessel::LMca, Vessel::LAca, Vessel::LPcom, Vessel::LPca),
    ] {
        edges.push((node(mca), node(ica)));
        if segment_state(spec, aca) != SegmentState::Aplastic {
            edges.push((node(aca), node(ica)));
        }
        if segment_state(spec, pca) != SegmentState::Aplastic {
            edges.push((node(pca), node(Vessel::Ba)));
        }
        if s {
            edges.push((node(pcom), node(ica)));
            edges.push((node(pcom), node(pca)));
        }
    }
    let acoms: Vec<NodeId> = match spec.acom {
        AcomState::Absent => vec![],
        AcomState::Present => vec![node(Vessel::Acom)],
        AcomState::Double => vec![node(Vessel::Acom), NodeId::new(Vessel::Acom, 1)],
    };
    for &a in &acoms {
        edges.push((a, node(Vessel::RAca)));
        edges.push((a, node(Vessel::LAca)));
    }
    if acoms.len() > 1 {
        nodes.push(acoms[1]);
    }
    if spec.third_a2 {
        edges.push((node(Vessel::ThirdA2), node(Vessel::Acom)));
    }
    let nodes = nodes.into_iter().map(|id| ComponentNode { id, voxels: 0 }).collect();
    ComponentGraph::new(nodes, edges)
}

/// A rendered phantom with its ground-truth graph.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub spec: PhantomSpec,
    pub volume: LabelVolume,
    /// Bounding box of the vessels plus a background margin.
    pub roi: RoiBox,
    /// Expected graph with voxel counts of the rendered tubes.
    pub graph: ComponentGraph,
}

fn bounds(layout: &Layout) -> (P, P) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut grow = |p: &P, r: f64| {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a] - r);
            hi[a] = hi[a].max(p[a] + r);
        }
    };
    for t in &layout.tubes {
        for (i, p) in t.points.iter().enumerate() {
            let r = t.radii[i.min(t.radii.len() - 1)].max(t.radii[i.saturating_sub(1)]);
            grow(p, r);
        }
    }
    for h in &layout.hubs {
        grow(&h.center, h.radius);
    }
    (lo, hi)
}

fn dist2_to_segment(p: P, a: P, b: P) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (0..3).map(|k| (ap[k] - t * ab[k]).powi(2)).sum()
}

struct Canvas<'a> {
    vol: LabelVolume,
    owner: Vec<u32>,
    map: &'a LabelMap,
}

impl Canvas<'_> {
    fn index_range(&self, lo: P, hi: P) -> [std::ops::Range<usize>; 3] {
        let dims = self.vol.dims();
        let o = self.vol.origin();
        let s = self.vol.spacing();
        std::array::from_fn(|a| {
            let start = ((lo[a] - o[a]) / s[a]).floor().max(0.0) as usize;
            let end = (((hi[a] - o[a]) / s[a]).ceil() + 1.0).clamp(0.0, dims[a] as f64) as usize;
            start.min(dims[a])..end
        })
    }

    fn paint(&mut self, lo: P, hi: P, owner: u32, label: u8, inside: impl Fn(P) -> bool) {
        let [rx, ry, rz] = self.index_range(lo, hi);
        for z in rz {
            for y in ry.clone() {
                for x in rx.clone() {
                    let p = self.vol.position_mm([x, y, z]);
                    if inside(p) {
                        let i = self.vol.index([x, y, z]);
                        self.vol.data_mut()[i] = label;
                        self.owner[i] = owner;
                    }
                }
            }
        }
    }

    fn paint_segment(&mut self, a: P, b: P, r: f64, owner: u32, v: Vessel) {
        let lo = std::array::from_fn(|k| a[k].min(b[k]) - r);
        let hi = std::array::from_fn(|k| a[k].max(b[k]) + r);
        let label = self.map.id(v);
        self.paint(lo, hi, owner, label, |p| dist2_to_segment(p, a, b) <= r * r);
    }

    fn paint_ball(&mut self, c: P, r: f64, owner: u32, v: Vessel) {
        let lo = std::array::from_fn(|k| c[k] - r);
        let hi = std::array::from_fn(|k| c[k] + r);
        let label = self.map.id(v);
        self.paint(lo, hi, owner, label, |p| (0..3).map(|k| (p[k] - c[k]).powi(2)).sum::<f64>() <= r * r);
    }
}

/// Renders `spec` into a label volume centred in its grid.
pub fn generate_phantom(spec: &PhantomSpec, map: &LabelMap) -> Result<Phantom> {
    let expected = expected_graph(spec)?;
    let layout = layout(spec);
    let (lo, hi) = bounds(&layout);

    let dims = spec.dims;
    let sp = spec.spacing;
    for a in 0..3 {
        let needed = ((hi[a] - lo[a]) / sp[a]).ceil() as usize + 2 * ROI_MARGIN + 3;
        if needed > dims[a] {
            return Err(Error::Phantom(format!(
                "grid {dims:?} with spacing {sp:?} is too small; axis {a} needs {needed} voxels"
            )));
        }
    }
    // Voxel world coordinates coincide with the template frame.
    let origin: P = std::array::from_fn(|a| 0.5 * (lo[a] + hi[a]) - 0.5 * (dims[a] - 1) as f64 * sp[a]);
    let vol = Volume::filled(dims, sp, 0u8).with_origin(origin);

    let node_ids: Vec<NodeId> = expected.nodes().iter().map(|n| n.id).collect();
    let owner_of = |id: NodeId| node_ids.iter().position(|&n| n == id).expect("layout node in graph") as u32 + 1;
    let mut canvas = Canvas {
        owner: vec![0; vol.len()],
        vol,
        map,
    };
    for t in &layout.tubes {
        let o = owner_of(t.node);
        for (seg, &r) in t.points.windows(2).zip(&t.radii) {
            canvas.paint_segment(seg[0], seg[1], r, o, t.node.vessel);
        }
    }
    for h in &layout.hubs {
        canvas.paint_ball(h.center, h.radius, owner_of(h.node), h.node.vessel);
    }

    let Canvas { vol, owner, .. } = canvas;
    check_gaps(&vol, map, &expected)?;
    let roi = foreground_roi(&vol)?;

    let mut counts = vec![0u64; node_ids.len() + 1];
    for &o in &owner {
        counts[o as usize] += 1;
    }
    let nodes = node_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| ComponentNode { id, voxels: counts[i + 1] })
        .collect();
    let graph = ComponentGraph::new(nodes, expected.edges().iter().copied())?;
    Ok(Phantom {
        spec: spec.clone(),
        volume: vol,
        roi,
        graph,
    })
}

fn foreground_roi(vol: &LabelVolume) -> Result<RoiBox> {
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for (i, &l) in vol.data().iter().enumerate() {
        if l != 0 {
            let c = vol.coords(i);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
    }
    if lo[0] == usize::MAX {
        return Err(Error::Phantom("phantom rendered no vessel voxels".into()));
    }
    let dims = vol.dims();
    for a in 0..3 {
        if lo[a] < ROI_MARGIN || hi[a] + ROI_MARGIN >= dims[a] {
            return Err(Error::Phantom("vessels reach the grid border".into()));
        }
    }
    let min = std::array::from_fn(|a| lo[a] - ROI_MARGIN);
    let size = std::array::from_fn(|a| hi[a] - lo[a] + 1 + 2 * ROI_MARGIN);
    Ok(RoiBox::new(min, size))
}

/// Rejects renders where classes that should not touch come within
/// [`MIN_GAP_VOXELS`] of each other.
fn check_gaps(vol: &LabelVolume, map: &LabelMap, expected: &ComponentGraph) -> Result<()> {
    let allowed: BTreeSet<(u8, u8)> = expected
        .vessel_edges()
        .into_iter()
        .flat_map(|(a, b)| {
            let (a, b) = (map.id(a), map.id(b));
            [(a, b), (b, a)]
        })
        .collect();
    let [nx, ny, nz] = vol.dims().map(|d| d as i64);
    let g = MIN_GAP_VOXELS;
    let data = vol.data();
    for (i, &a) in data.iter().enumerate() {
        if a == 0 {
            continue;
        }
        let [x, y, z] = vol.coords(i).map(|c| c as i64);
        for dz in -g..=g {
            for dy in -g..=g {
                for dx in -g..=g {
                    let (u, v, w) = (x + dx, y + dy, z + dz);
                    if u < 0 || v < 0 || w < 0 || u >= nx || v >= ny || w >= nz {
                        continue;
                    }
                    let b = data[(u + nx * (v + ny * w)) as usize];
                    if b != 0 && b != a && !allowed.contains(&(a, b)) {
                        let name = |l| map.vessel(l).map_or("?", |v: Vessel| v.name());
                        return Err(Error::Phantom(format!(
                            "{} and {} come within {g} voxels but must not touch",
                            name(a),
                            name(b)
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}
