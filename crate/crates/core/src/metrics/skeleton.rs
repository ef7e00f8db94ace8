//! 3D centerline extraction by topology-preserving thinning.
//!
//! Border voxels are peeled in six directional subiterations. A voxel is
//! deleted only if it is a simple point (its removal changes neither the
//! number of 26-connected foreground components nor the number of
//! 6-connected background components in its neighbourhood) and it is not a
//! line end. Candidates are re-checked one by one before deletion, so the
//! result has the same number of 26-connected components as the input.

use crate::volume::{LabelVolume, Volume};

/// Binary centerline mask (values 0/1) on the grid of its source mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonVolume(pub LabelVolume);

impl SkeletonVolume {
    pub fn volume(&self) -> &LabelVolume {
        &self.0
    }

    pub fn voxel_count(&self) -> u64 {
        self.0.foreground_count()
    }
}

const CENTER: usize = 13;

#[inline]
fn pos(dx: i32, dy: i32, dz: i32) -> usize {
    ((dx + 1) + 3 * (dy + 1) + 9 * (dz + 1)) as usize
}

/// Neighbourhood tables over the 27 positions of a 3x3x3 block.
struct Tables {
    adj26: [u32; 27],
    adj6: [u32; 27],
    /// The 18-neighbourhood without the centre.
    n18: u32,
    /// The six face neighbours of the centre.
    faces: u32,
}

impl Tables {
    fn new() -> Self {
        let mut adj26 = [0u32; 27];
        let mut adj6 = [0u32; 27];
        let mut n18 = 0u32;
        let mut faces = 0u32;
        let coord = |p: usize| [(p % 3) as i32 - 1, ((p / 3) % 3) as i32 - 1, (p / 9) as i32 - 1];
        for p in 0..27 {
            let a = coord(p);
            let nonzero = a.iter().filter(|&&c| c != 0).count();
            if p != CENTER && nonzero <= 2 {
                n18 |= 1 << p;
            }
            if nonzero == 1 {
                faces |= 1 << p;
            }
            for q in 0..27 {
                if p == q {
                    continue;
                }
                let b = coord(q);
                let d: Vec<i32> = (0..3).map(|i| (a[i] - b[i]).abs()).collect();
                if d.iter().all(|&c| c <= 1) {
                    adj26[p] |= 1 << q;
                    if d.iter().sum::<i32>() == 1 {
                        adj6[p] |= 1 << q;
                    }
                }
            }
        }
        Tables { adj26, adj6, n18, faces }
    }

    /// Grows the component of `set` containing `seed` bits.
    #[inline]
    fn flood(adj: &[u32; 27], set: u32, seed: u32) -> u32 {
        let mut comp = seed;
        let mut frontier = seed;
        while frontier != 0 {
            let mut next = 0u32;
            let mut f = frontier;
            while f != 0 {
                let b = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= adj[b];
            }
            next &= set & !comp;
            comp |= next;
            frontier = next;
        }
        comp
    }

    /// Whether deleting the centre of `nbhd` preserves local topology.
    fn is_simple(&self, nbhd: u32) -> bool {
        let fg = nbhd & !(1 << CENTER) & ((1 << 27) - 1);
        if fg == 0 {
            return false;
        }
        let first = fg & fg.wrapping_neg();
        if Self::flood(&self.adj26, fg, first) != fg {
            return false;
        }
        let bg = !nbhd & self.n18;
        let touching = bg & self.faces;
        if touching == 0 {
            return false;
        }
        let seed = touching & touching.wrapping_neg();
        let comp = Self::flood(&self.adj6, bg, seed);
        touching & !comp == 0
    }
}

/// Thins the nonzero voxels of `mask` to a one-voxel-thin centerline.
pub fn skeletonize(mask: &LabelVolume) -> SkeletonVolume {
    let [nx, ny, nz] = mask.dims();
    // One voxel of background padding on every side removes bounds checks.
    let (px, py) = (nx + 2, ny + 2);
    let pz = nz + 2;
    let mut img = vec![0u8; px * py * pz];
    let mut active: Vec<usize> = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if mask.data()[x + nx * (y + ny * z)] != 0 {
                    let i = (x + 1) + px * ((y + 1) + py * (z + 1));
                    img[i] = 1;
                    active.push(i);
                }
            }
        }
    }

    let tables = Tables::new();
    let mut offsets = [0isize; 27];
    for dz in -1..=1 {
        for dy in -1..=1 {
            for dx in -1..=1 {
                offsets[pos(dx, dy, dz)] = dx as isize + px as isize * (dy as isize + py as isize * dz as isize);
            }
        }
    }
    let gather = |img: &[u8], i: usize| -> u32 {
        let mut m = 0u32;
        for (p, &o) in offsets.iter().enumerate() {
            m |= (img[(i as isize + o) as usize] as u32) << p;
        }
        m
    };
    let directions = [
        pos(0, -1, 0),
        pos(0, 1, 0),
        pos(1, 0, 0),
        pos(-1, 0, 0),
        pos(0, 0, 1),
        pos(0, 0, -1),
    ];

    let mut candidates = Vec::new();
    loop {
        let mut removed_any = false;
        for &dir in &directions {
            candidates.clear();
            for &i in &active {
                if img[(i as isize + offsets[dir]) as usize] != 0 {
                    continue;
                }
                let n = gather(&img, i);
                if (n & !(1 << CENTER)).count_ones() > 1 && tables.is_simple(n) {
                    candidates.push(i);
                }
            }
            let mut removed = false;
            for &i in &candidates {
                let n = gather(&img, i);
                if (n & !(1 << CENTER)).count_ones() > 1 && tables.is_simple(n) {
                    img[i] = 0;
                    removed = true;
                }
            }
            if removed {
                active.retain(|&i| img[i] != 0);
                removed_any = true;
            }
        }
        if !removed_any {
            break;
        }
    }

    let mut out = vec![0u8; nx * ny * nz];
    for &i in &active {
        let x = i % px - 1;
        let y = (i / px) % py - 1;
        let z = i / (px * py) - 1;
        out[x + nx * (y + ny * z)] = 1;
    }
    SkeletonVolume(
        Volume::from_vec(mask.dims(), mask.spacing(), out)
            .expect("same grid as input")
            .with_origin(mask.origin()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nbhd(points: &[[i32; 3]]) -> u32 {
        points.iter().fold(1 << CENTER, |m, &[x, y, z]| m | 1 << pos(x, y, z))
    }

    #[test]
    fn simple_point_cases() {
        let t = Tables::new();
        // Isolated voxel: deleting it removes a component.
        assert!(!t.is_simple(nbhd(&[])));
        // Line end.
        assert!(t.is_simple(nbhd(&[[1, 0, 0]])));
        // Middle of a line: deleting it splits the line.
        assert!(!t.is_simple(nbhd(&[[1, 0, 0], [-1, 0, 0]])));
        // Surface corner of a solid block.
        let mut block = Vec::new();
        for x in 0..=1 {
            for y in 0..=1 {
                for z in 0..=1 {
                    if [x, y, z] != [0, 0, 0] {
                        block.push([x, y, z]);
                    }
                }
            }
        }
        assert!(t.is_simple(nbhd(&block)));
        // Interior voxel: deleting it creates a cavity.
        let mut full = Vec::new();
        for x in -1..=1 {
            for y in -1..=1 {
                for z in -1..=1 {
                    full.push([x, y, z]);
                }
            }
        }
        assert!(!t.is_simple(nbhd(&full)));
        // Ring around the centre in the z=0 plane: deleting it opens a tunnel.
        let ring: Vec<_> = [[1, 0, 0], [1, 1, 0], [0, 1, 0], [-1, 1, 0], [-1, 0, 0], [-1, -1, 0], [0, -1, 0], [1, -1, 0]]
            .into_iter()
            .collect();
        assert!(!t.is_simple(nbhd(&ring)));
    }

    #[test]
    fn empty_mask_has_empty_skeleton() {
        let s = skeletonize(&LabelVolume::zeros([6, 6, 6]));
        assert_eq!(s.voxel_count(), 0);
    }

    #[test]
    fn single_voxel_survives() {
        let mut v = LabelVolume::zeros([3, 3, 3]);
        v.set([1, 1, 1], 1);
        assert_eq!(skeletonize(&v).0, v);
    }

    #[test]
    fn solid_block_thins_to_subset() {
        let mut v = LabelVolume::zeros([9, 9, 9]);
        for i in 0..v.len() {
            let c = v.coords(i);
            if c.iter().all(|&a| (2..7).contains(&a)) {
                v.data_mut()[i] = 1;
            }
        }
        let s = skeletonize(&v);
        assert!(s.voxel_count() >= 1);
        assert!(s.voxel_count() < 20);
        for (a, b) in s.0.data().iter().zip(v.data()) {
            assert!(*a <= *b);
        }
    }
}
