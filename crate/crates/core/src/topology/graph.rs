use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{label_components, Connectivity, Grouping};
use crate::volume::{LabelMap, LabelVolume, Vessel};

/// One connected component of one vessel class. `index` counts components of
/// the same class in raster order of their first voxel, starting at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub vessel: Vessel,
    pub index: u32,
}

impl NodeId {
    pub fn new(vessel: Vessel, index: u32) -> Self {
        NodeId { vessel, index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentNode {
    pub id: NodeId,
    /// Voxel count; 0 when the graph was derived without voxelization.
    pub voxels: u64,
}

/// Vessel components and the contacts between them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentGraph {
    nodes: Vec<ComponentNode>,
    /// Unordered pairs stored with the smaller id first.
    edges: BTreeSet<(NodeId, NodeId)>,
}

/// Node and edge structure without voxel counts, for graph comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphShape {
    pub counts: BTreeMap<Vessel, u32>,
    pub edges: BTreeSet<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphOptions {
    /// Neighbourhood joining voxels of one class into a component.
    pub connectivity: Connectivity,
    /// Neighbourhood within which two components count as touching.
    pub adjacency: Connectivity,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            connectivity: Connectivity::TwentySix,
            adjacency: Connectivity::TwentySix,
        }
    }
}

impl ComponentGraph {
    /// Builds a graph from explicit nodes and edges. Self-edges are rejected
    /// and edge endpoints must be nodes.
    pub fn new(nodes: Vec<ComponentNode>, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.id);
        let ids: BTreeSet<NodeId> = nodes.iter().map(|n| n.id).collect();
        if ids.len() != nodes.len() {
            return Err(Error::InvalidVolume("duplicate graph node".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidVolume(format!("self-edge on {}#{}", a.vessel, a.index)));
            }
            if !ids.contains(&a) || !ids.contains(&b) {
                return Err(Error::InvalidVolume("edge endpoint is not a node".into()));
            }
            set.insert(if a < b { (a, b) } else { (b, a) });
        }
        Ok(ComponentGraph { nodes, edges: set })
    }

    pub fn nodes(&self) -> &[ComponentNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of components of `v` (its Betti-0).
    pub fn component_count(&self, v: Vessel) -> u32 {
        self.nodes.iter().filter(|n| n.id.vessel == v).count() as u32
    }

    pub fn present(&self, v: Vessel) -> bool {
        self.component_count(v) > 0
    }

    /// Whether any component of `a` touches any component of `b`.
    pub fn touches(&self, a: Vessel, b: Vessel) -> bool {
        self.edges
            .iter()
            .any(|(x, y)| (x.vessel == a && y.vessel == b) || (x.vessel == b && y.vessel == a))
    }

    pub fn counts(&self) -> BTreeMap<Vessel, u32> {
        let mut out = BTreeMap::new();
        for n in &self.nodes {
            *out.entry(n.id.vessel).or_insert(0) += 1;
        }
        out
    }

    pub fn shape(&self) -> GraphShape {
        GraphShape {
            counts: self.counts(),
            edges: self.edges.clone(),
        }
    }

    pub fn total_voxels(&self) -> u64 {
        self.nodes.iter().map(|n| n.voxels).sum()
    }

    /// Vessel-level edge list, one entry per touching class pair.
    pub fn vessel_edges(&self) -> BTreeSet<(Vessel, Vessel)> {
        self.edges
            .iter()
            .map(|(a, b)| if a.vessel <= b.vessel { (a.vessel, b.vessel) } else { (b.vessel, a.vessel) })
            .collect()
    }
}

/// Connected components of every class and the contacts between them.
pub fn extract_component_graph(vol: &LabelVolume, map: &LabelMap, opts: &GraphOptions) -> Result<ComponentGraph> {
    vol.check_labels(map)?;
    let comps = label_components(vol, opts.connectivity, Grouping::SameLabel);

    let mut next_index = [0u32; 256];
    let ids: Vec<NodeId> = comps
        .classes
        .iter()
        .map(|&c| {
            let vessel = map.vessel(c).expect("labels checked");
            let index = next_index[c as usize];
            next_index[c as usize] += 1;
            NodeId { vessel, index }
        })
        .collect();
    let nodes = ids
        .iter()
        .zip(&comps.sizes)
        .map(|(&id, &voxels)| ComponentNode { id, voxels })
        .collect();

    let [nx, ny, nz] = vol.dims();
    let backward: Vec<([i32; 3], isize)> = opts
        .adjacency
        .backward_offsets()
        .into_iter()
        .map(|d| (d, d[0] as isize + nx as isize * (d[1] as isize + ny as isize * d[2] as isize)))
        .collect();
    let labels = &comps.labels;
    let mut pairs: HashSet<(u32, u32)> = HashSet::new();
    for z in 0..nz {
        for y in 0..ny {
            let row = nx * (y + ny * z);
            for x in 0..nx {
                let i = row + x;
                let a = labels[i];
                if a == 0 {
                    continue;
                }
                for &([dx, dy, dz], delta) in &backward {
                    if (dx < 0 && x == 0) || (dx > 0 && x + 1 == nx) || (dy < 0 && y == 0) || (dy > 0 && y + 1 == ny) || (dz < 0 && z == 0) {
                        continue;
                    }
                    let b = labels[(i as isize + delta) as usize];
                    if b != 0 && b != a {
                        pairs.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
    }
    let edges = pairs.into_iter().map(|(a, b)| (ids[a as usize - 1], ids[b as usize - 1]));
    ComponentGraph::new(nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Volume;

    #[test]
    fn empty_volume_gives_empty_graph() {
        let g = extract_component_graph(&LabelVolume::zeros([4, 4, 4]), &LabelMap::default(), &GraphOptions::default()).unwrap();
        assert!(g.is_empty());
        assert!(g.edges().is_empty());
    }

    #[test]
    fn separated_same_class_tubes() {
        // Two BA rods three voxels apart: two nodes, no edge.
        let mut v = LabelVolume::zeros([10, 8, 3]);
        for x in 0..10 {
            v.set([x, 1, 1], 1);
            v.set([x, 5, 1], 1);
        }
        let g = extract_component_graph(&v, &LabelMap::default(), &GraphOptions::default()).unwrap();
        assert_eq!(g.component_count(Vessel::Ba), 2);
        assert!(g.edges().is_empty());
        assert_eq!(g.total_voxels(), 20);
    }

    #[test]
    fn touching_classes_get_one_edge() {
        let map = LabelMap::default();
        let acom = map.id(Vessel::Acom);
        let raca = map.id(Vessel::RAca);
        let v = Volume::from_vec([5, 1, 1], [1.0; 3], vec![raca, raca, acom, 0, raca]).unwrap();
        let g = extract_component_graph(&v, &map, &GraphOptions::default()).unwrap();
        assert_eq!(g.component_count(Vessel::RAca), 2);
        assert_eq!(g.edges().len(), 1);
        assert!(g.touches(Vessel::Acom, Vessel::RAca));
        let (a, b) = *g.edges().iter().next().unwrap();
        assert_eq!((a, b), (NodeId::new(Vessel::Acom, 0), NodeId::new(Vessel::RAca, 0)));
    }

    #[test]
    fn diagonal_contact_respects_adjacency_option() {
        let map = LabelMap::default();
        let mut v = LabelVolume::zeros([2, 2, 2]);
        v.set([0, 0, 0], map.id(Vessel::Ba));
        v.set([1, 1, 1], map.id(Vessel::RPca));
        let loose = extract_component_graph(&v, &map, &GraphOptions::default()).unwrap();
        assert_eq!(loose.edges().len(), 1);
        let strict = GraphOptions {
            adjacency: Connectivity::Six,
            ..Default::default()
        };
        assert!(extract_component_graph(&v, &map, &strict).unwrap().edges().is_empty());
    }

    #[test]
    fn rejects_self_edges() {
        let n = NodeId::new(Vessel::Ba, 0);
        let nodes = vec![ComponentNode { id: n, voxels: 1 }];
        assert!(ComponentGraph::new(nodes, [(n, n)]).is_err());
    }
}
