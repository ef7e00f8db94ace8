//! Connected-component labeling on voxel grids (two-pass, union-find).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::volume::LabelVolume;

/// Voxel neighbourhood used for connected components and adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    /// Face neighbours.
    Six,
    /// Face and edge neighbours.
    Eighteen,
    /// Face, edge and corner neighbours.
    #[default]
    TwentySix,
}

impl Connectivity {
    pub const ALL: [Connectivity; 3] = [Connectivity::Six, Connectivity::Eighteen, Connectivity::TwentySix];

    /// Whether `d` (each component in -1..=1, not all zero) is a neighbour offset.
    pub fn includes(self, d: [i32; 3]) -> bool {
        let nonzero = d.iter().filter(|&&c| c != 0).count();
        nonzero >= 1
            && match self {
                Connectivity::Six => nonzero == 1,
                Connectivity::Eighteen => nonzero <= 2,
                Connectivity::TwentySix => true,
            }
    }

    /// All neighbour offsets.
    pub fn offsets(self) -> Vec<[i32; 3]> {
        let mut out = Vec::with_capacity(26);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if self.includes([dx, dy, dz]) {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }

    /// Offsets that precede the centre voxel in x-fastest raster order.
    pub fn backward_offsets(self) -> Vec<[i32; 3]> {
        self.offsets()
            .into_iter()
            .filter(|&[dx, dy, dz]| dz < 0 || (dz == 0 && (dy < 0 || (dy == 0 && dx < 0))))
            .collect()
    }
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self, Error> {
        match v {
            6 => Ok(Connectivity::Six),
            18 => Ok(Connectivity::Eighteen),
            26 => Ok(Connectivity::TwentySix),
            _ => Err(Error::Config(format!("connectivity must be 6, 18 or 26, got {v}"))),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Six => 6,
            Connectivity::Eighteen => 18,
            Connectivity::TwentySix => 26,
        }
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

impl std::str::FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        s.trim()
            .parse::<u8>()
            .map_err(|_| Error::Config(format!("connectivity must be 6, 18 or 26, got {s:?}")))?
            .try_into()
    }
}

/// Which voxels may join the same component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// Any two nonzero neighbours.
    Foreground,
    /// Neighbours carrying the same nonzero label.
    SameLabel,
}

/// Result of component labeling.
///
/// Component ids run from 1 in raster order of each component's first voxel;
/// 0 marks background.
#[derive(Debug, Clone)]
pub struct Components {
    pub labels: Vec<u32>,
    /// Input label of each component (index `id - 1`).
    pub classes: Vec<u8>,
    /// Voxel count of each component (index `id - 1`).
    pub sizes: Vec<u64>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.classes.len()
    }

    /// Number of components carrying each input label.
    pub fn per_class_counts(&self) -> [u32; 256] {
        let mut out = [0u32; 256];
        for &c in &self.classes {
            out[c as usize] += 1;
        }
        out
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Labels connected components of the nonzero voxels of `vol`.
pub fn label_components(vol: &LabelVolume, conn: Connectivity, grouping: Grouping) -> Components {
    let [nx, ny, nz] = vol.dims();
    let data = vol.data();
    let backward: Vec<([i32; 3], isize)> = conn
        .backward_offsets()
        .into_iter()
        .map(|d| (d, d[0] as isize + nx as isize * (d[1] as isize + ny as isize * d[2] as isize)))
        .collect();

    // Provisional labels are stored 1-based so 0 stays background.
    let mut labels = vec![0u32; data.len()];
    let mut uf = UnionFind { parent: vec![0] };

    for z in 0..nz {
        for y in 0..ny {
            let row = nx * (y + ny * z);
            for x in 0..nx {
                let i = row + x;
                let v = data[i];
                if v == 0 {
                    continue;
                }
                let mut current = 0u32;
                for &([dx, dy, dz], delta) in &backward {
                    if (dx < 0 && x == 0) || (dx > 0 && x + 1 == nx) || (dy < 0 && y == 0) || (dy > 0 && y + 1 == ny) || (dz < 0 && z == 0) {
                        continue;
                    }
                    let j = (i as isize + delta) as usize;
                    let w = data[j];
                    let joins = match grouping {
                        Grouping::Foreground => w != 0,
                        Grouping::SameLabel => w == v,
                    };
                    if !joins {
                        continue;
                    }
                    let lj = labels[j];
                    current = if current == 0 { uf.find(lj) } else { uf.union(current, lj) };
                }
                labels[i] = if current == 0 { uf.make() } else { current };
            }
        }
    }

    // Final ids in order of first appearance.
    let mut final_id = vec![0u32; uf.parent.len()];
    let mut classes = Vec::new();
    let mut sizes = Vec::new();
    for (i, l) in labels.iter_mut().enumerate() {
        if *l == 0 {
            continue;
        }
        let root = uf.find(*l) as usize;
        if final_id[root] == 0 {
            classes.push(data[i]);
            sizes.push(0);
            final_id[root] = classes.len() as u32;
        }
        *l = final_id[root];
        sizes[*l as usize - 1] += 1;
    }
    Components { labels, classes, sizes }
}

/// Zeroth Betti number: number of connected components of the nonzero voxels.
pub fn betti0(mask: &LabelVolume, conn: Connectivity) -> usize {
    label_components(mask, conn, Grouping::Foreground).count()
}
