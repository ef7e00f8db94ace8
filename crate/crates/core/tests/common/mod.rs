//! Test-only oracles, written independently of the library kernels.
#![allow(dead_code)]

pub mod scenarios;

use std::collections::{HashSet, VecDeque};

use cowtopo::LabelVolume;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counts components of nonzero voxels by breadth-first search over a set of
/// coordinates, checking every offset in the cube of radius one against the
/// requested neighbour rule.
pub fn flood_fill_count(vol: &LabelVolume, connectivity: u8) -> usize {
    let dims = vol.dims();
    let mut todo: HashSet<[i64; 3]> = HashSet::new();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                if vol.get([x, y, z]) != 0 {
                    todo.insert([x as i64, y as i64, z as i64]);
                }
            }
        }
    }
    let allowed = |d: [i64; 3]| {
        let nz = d.iter().filter(|&&c| c != 0).count() as u8;
        match connectivity {
            6 => nz == 1,
            18 => (1..=2).contains(&nz),
            26 => nz >= 1,
            _ => panic!("bad connectivity"),
        }
    };
    let mut count = 0;
    while let Some(&start) = todo.iter().next() {
        todo.remove(&start);
        count += 1;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if !allowed([dx, dy, dz]) {
                            continue;
                        }
                        let q = [p[0] + dx, p[1] + dy, p[2] + dz];
                        if todo.remove(&q) {
                            queue.push_back(q);
                        }
                    }
                }
            }
        }
    }
    count
}

/// Components of voxels carrying exactly `label`, 26-connected.
pub fn flood_fill_class(vol: &LabelVolume, label: u8) -> usize {
    flood_fill_count(&vol.map(|&v| u8::from(v == label)), 26)
}

pub fn bernoulli(dims: [usize; 3], p: f64, seed: u64) -> LabelVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = LabelVolume::zeros(dims);
    for x in v.data_mut() {
        *x = u8::from(rng.gen_bool(p));
    }
    v
}

/// Straight tube along x: voxels with (y-cy)^2 + (z-cz)^2 <= r^2 and x in [x0, x0+len).
pub fn tube_x(dims: [usize; 3], x0: usize, len: usize, center: [usize; 2], radius: f64) -> LabelVolume {
    let mut v = LabelVolume::zeros(dims);
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            let dy = y as f64 - center[0] as f64;
            let dz = z as f64 - center[1] as f64;
            if dy * dy + dz * dz <= radius * radius {
                for x in x0..x0 + len {
                    v.set([x, y, z], 1);
                }
            }
        }
    }
    v
}

pub fn ball(v: &mut LabelVolume, c: [f64; 3], r: f64, label: u8) {
    let dims = v.dims();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let d2 = (x as f64 - c[0]).powi(2) + (y as f64 - c[1]).powi(2) + (z as f64 - c[2]).powi(2);
                if d2 <= r * r {
                    v.set([x, y, z], label);
                }
            }
        }
    }
}

/// Number of 26-neighbours of each nonzero voxel that are also nonzero.
pub fn neighbour_degrees(v: &LabelVolume) -> Vec<usize> {
    let dims = v.dims();
    let mut out = Vec::new();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                if v.get([x, y, z]) == 0 {
                    continue;
                }
                let mut deg = 0;
                for dz in -1i64..=1 {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            if (dx, dy, dz) == (0, 0, 0) {
                                continue;
                            }
                            let q = [x as i64 + dx, y as i64 + dy, z as i64 + dz];
                            if v.contains(q) && v.get([q[0] as usize, q[1] as usize, q[2] as usize]) != 0 {
                                deg += 1;
                            }
                        }
                    }
                }
                out.push(deg);
            }
        }
    }
    out
}

/// Voxel histogram by linear scan.
pub fn histogram(v: &LabelVolume) -> std::collections::BTreeMap<u8, u64> {
    let mut h = std::collections::BTreeMap::new();
    for &x in v.data() {
        *h.entry(x).or_insert(0) += 1;
    }
    h
}
