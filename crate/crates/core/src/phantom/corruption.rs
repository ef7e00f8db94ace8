//! Controlled edits of a label volume that each produce a known change in
//! Dice, detection or topology.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{LabelMap, LabelVolume, RoiBox, Vessel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Corruption {
    /// Removes a slab of `gap_mm` across the class, perpendicular to its
    /// principal axis, centred at `at` or at the median voxel along the axis.
    Break {
        vessel: Vessel,
        gap_mm: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at: Option<[usize; 3]>,
    },
    /// Sets every voxel of the class to background.
    DropClass { vessel: Vessel },
    /// Paints a ball of the class on background voxels, centred at the class
    /// centroid plus `offset_mm`.
    FloatingBlob {
        vessel: Vessel,
        radius_mm: f64,
        offset_mm: [f64; 3],
    },
    /// Exchanges the labels of two classes inside `region`.
    CrossoverSwap { a: Vessel, b: Vessel, region: RoiBox },
    /// Grows (positive) or shrinks (negative) the class by face-connected
    /// layers. Dilation only claims background.
    DilateErode { vessel: Vessel, steps: i32 },
}

impl Corruption {
    /// Vessels whose voxels this corruption edits.
    pub fn vessels(&self) -> Vec<Vessel> {
        match *self {
            Corruption::Break { vessel, .. }
            | Corruption::DropClass { vessel }
            | Corruption::FloatingBlob { vessel, .. }
            | Corruption::DilateErode { vessel, .. } => vec![vessel],
            Corruption::CrossoverSwap { a, b, .. } => vec![a, b],
        }
    }
}

impl fmt::Display for Corruption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let triple = |v: [f64; 3]| format!("{},{},{}", v[0], v[1], v[2]);
        let utriple = |v: [usize; 3]| format!("{},{},{}", v[0], v[1], v[2]);
        match self {
            Corruption::Break { vessel, gap_mm, at } => {
                write!(f, "break:{vessel}:{gap_mm}")?;
                if let Some(p) = at {
                    write!(f, ":{}", utriple(*p))?;
                }
                Ok(())
            }
            Corruption::DropClass { vessel } => write!(f, "drop:{vessel}"),
            Corruption::FloatingBlob {
                vessel,
                radius_mm,
                offset_mm,
            } => write!(f, "blob:{vessel}:{radius_mm}:{}", triple(*offset_mm)),
            Corruption::CrossoverSwap { a, b, region } => {
                write!(f, "swap:{a}:{b}:{}:{}", utriple(region.min), utriple(region.size))
            }
            Corruption::DilateErode { vessel, steps } => write!(f, "morph:{vessel}:{steps:+}"),
        }
    }
}

fn parse_triple<T: FromStr>(s: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || Error::Corruption(format!("expected three comma-separated numbers, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.trim().parse::<T>().map_err(|_| bad())?);
    }
    out.try_into().map_err(|_| bad())
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Corruption(format!("invalid {what} {s:?}")))
}

fn parse_vessel(s: &str) -> Result<Vessel> {
    s.parse().map_err(|_| Error::Corruption(format!("unknown vessel {s:?}")))
}

/// Parses the compact forms `break:V:gap[:x,y,z]`, `drop:V`,
/// `blob:V:radius:dx,dy,dz`, `swap:A:B:x,y,z:sx,sy,sz` and `morph:V:steps`.
impl FromStr for Corruption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let c = match parts.as_slice() {
            ["break", v, gap] => Corruption::Break {
                vessel: parse_vessel(v)?,
                gap_mm: parse_num(gap, "gap")?,
                at: None,
            },
            ["break", v, gap, at] => Corruption::Break {
                vessel: parse_vessel(v)?,
                gap_mm: parse_num(gap, "gap")?,
                at: Some(parse_triple(at)?),
            },
            ["drop", v] => Corruption::DropClass { vessel: parse_vessel(v)? },
            ["blob", v, r, off] => Corruption::FloatingBlob {
                vessel: parse_vessel(v)?,
                radius_mm: parse_num(r, "radius")?,
                offset_mm: parse_triple(off)?,
            },
            ["swap", a, b, min, size] => Corruption::CrossoverSwap {
                a: parse_vessel(a)?,
                b: parse_vessel(b)?,
                region: RoiBox::new(parse_triple(min)?, parse_triple(size)?),
            },
            ["morph", v, steps] => Corruption::DilateErode {
                vessel: parse_vessel(v)?,
                steps: parse_num(steps.trim_start_matches('+'), "step count")?,
            },
            _ => return Err(Error::Corruption(format!("cannot parse corruption {s:?}"))),
        };
        Ok(c)
    }
}

fn class_voxels(vol: &LabelVolume, label: u8) -> Vec<usize> {
    vol.data()
        .iter()
        .enumerate()
        .filter(|&(_, &l)| l == label)
        .map(|(i, _)| i)
        .collect()
}

fn centroid(vol: &LabelVolume, voxels: &[usize]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for &i in voxels {
        let p = vol.position_mm(vol.coords(i));
        for a in 0..3 {
            c[a] += p[a];
        }
    }
    c.map(|x| x / voxels.len() as f64)
}

/// Dominant eigenvector of the covariance of `voxels`, by power iteration.
fn principal_axis(vol: &LabelVolume, voxels: &[usize], mean: [f64; 3]) -> [f64; 3] {
    let mut cov = [[0.0; 3]; 3];
    for &i in voxels {
        let p = vol.position_mm(vol.coords(i));
        let d = [p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]];
        for r in 0..3 {
            for c in 0..3 {
                cov[r][c] += d[r] * d[c];
            }
        }
    }
    // Start from the widest coordinate axis so a degenerate class still gets
    // a sensible direction.
    let widest = (0..3).max_by(|&a, &b| cov[a][a].total_cmp(&cov[b][b])).unwrap_or(0);
    let mut v = [0.0; 3];
    v[widest] = 1.0;
    for _ in 0..100 {
        let w: [f64; 3] = std::array::from_fn(|r| (0..3).map(|c| cov[r][c] * v[c]).sum());
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            break;
        }
        v = w.map(|x| x / n);
    }
    v
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Voxel indices an operator is allowed to change, given the input volume.
pub fn corruption_support(vol: &LabelVolume, c: &Corruption, map: &LabelMap) -> Result<Vec<usize>> {
    let id = |v: Vessel| map.id(v);
    match c {
        Corruption::Break { vessel, gap_mm, at } => {
            if !(*gap_mm > 0.0 && gap_mm.is_finite()) {
                return Err(Error::Corruption(format!("gap must be positive, got {gap_mm}")));
            }
            let voxels = class_voxels(vol, id(*vessel));
            if voxels.is_empty() {
                return Err(Error::Corruption(format!("cannot break {vessel}: class is absent")));
            }
            let mean = centroid(vol, &voxels);
            let axis = principal_axis(vol, &voxels, mean);
            let proj: Vec<f64> = voxels.iter().map(|&i| dot(vol.position_mm(vol.coords(i)), axis)).collect();
            let centre = match at {
                Some(p) => {
                    if !vol.contains(p.map(|x| x as i64)) {
                        return Err(Error::Corruption(format!("break point {p:?} outside the volume")));
                    }
                    dot(vol.position_mm(*p), axis)
                }
                None => {
                    let mut sorted = proj.clone();
                    sorted.sort_by(f64::total_cmp);
                    sorted[sorted.len() / 2]
                }
            };
            Ok(voxels
                .into_iter()
                .zip(proj)
                .filter(|&(_, t)| (t - centre).abs() <= 0.5 * gap_mm)
                .map(|(i, _)| i)
                .collect())
        }
        Corruption::DropClass { vessel } => Ok(class_voxels(vol, id(*vessel))),
        Corruption::FloatingBlob {
            vessel,
            radius_mm,
            offset_mm,
        } => {
            if !(*radius_mm > 0.0 && radius_mm.is_finite()) {
                return Err(Error::Corruption(format!("blob radius must be positive, got {radius_mm}")));
            }
            let voxels = class_voxels(vol, id(*vessel));
            let base = if voxels.is_empty() {
                let d = vol.dims();
                vol.position_mm([d[0] / 2, d[1] / 2, d[2] / 2])
            } else {
                centroid(vol, &voxels)
            };
            let centre: [f64; 3] = std::array::from_fn(|a| base[a] + offset_mm[a]);
            let r2 = radius_mm * radius_mm;
            let out: Vec<usize> = (0..vol.len())
                .filter(|&i| {
                    let p = vol.position_mm(vol.coords(i));
                    vol.data()[i] == 0 && (0..3).map(|a| (p[a] - centre[a]).powi(2)).sum::<f64>() <= r2
                })
                .collect();
            if out.is_empty() {
                return Err(Error::Corruption(format!("blob at {centre:?} covers no background voxel")));
            }
            Ok(out)
        }
        Corruption::CrossoverSwap { a, b, region } => {
            region.check_within(vol.dims())?;
            let (la, lb) = (id(*a), id(*b));
            Ok((0..vol.len())
                .filter(|&i| {
                    let l = vol.data()[i];
                    (l == la || l == lb) && region.contains(vol.coords(i))
                })
                .collect())
        }
        Corruption::DilateErode { vessel, steps } => {
            let l = id(*vessel);
            Ok(if *steps >= 0 {
                (0..vol.len()).filter(|&i| vol.data()[i] == 0).collect()
            } else {
                class_voxels(vol, l)
            })
        }
    }
}

fn face_neighbours(dims: [usize; 3], i: usize) -> impl Iterator<Item = Option<usize>> {
    let [nx, ny, nz] = dims;
    let (x, y, z) = (i % nx, (i / nx) % ny, i / (nx * ny));
    [
        (x > 0).then(|| i - 1),
        (x + 1 < nx).then(|| i + 1),
        (y > 0).then(|| i - nx),
        (y + 1 < ny).then(|| i + nx),
        (z > 0).then(|| i - nx * ny),
        (z + 1 < nz).then(|| i + nx * ny),
    ]
    .into_iter()
}

/// Applies one corruption, returning the edited copy.
pub fn apply_corruption(vol: &LabelVolume, c: &Corruption, map: &LabelMap) -> Result<LabelVolume> {
    let mut out = vol.clone();
    match c {
        Corruption::Break { .. } | Corruption::DropClass { .. } => {
            for i in corruption_support(vol, c, map)? {
                out.data_mut()[i] = 0;
            }
        }
        Corruption::FloatingBlob { vessel, .. } => {
            let l = map.id(*vessel);
            for i in corruption_support(vol, c, map)? {
                out.data_mut()[i] = l;
            }
        }
        Corruption::CrossoverSwap { a, b, .. } => {
            let (la, lb) = (map.id(*a), map.id(*b));
            for i in corruption_support(vol, c, map)? {
                let d = out.data_mut();
                d[i] = if d[i] == la { lb } else { la };
            }
        }
        Corruption::DilateErode { vessel, steps } => {
            let l = map.id(*vessel);
            let dims = vol.dims();
            for _ in 0..steps.unsigned_abs() {
                let cur = out.data().to_vec();
                let d = out.data_mut();
                for i in 0..cur.len() {
                    if *steps > 0 {
                        if cur[i] == 0 && face_neighbours(dims, i).flatten().any(|j| cur[j] == l) {
                            d[i] = l;
                        }
                    } else if cur[i] == l && face_neighbours(dims, i).any(|j| j.map_or(true, |j| cur[j] != l)) {
                        d[i] = 0;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Applies corruptions in order.
pub fn apply_corruptions(vol: &LabelVolume, cs: &[Corruption], map: &LabelMap) -> Result<LabelVolume> {
    let mut out = vol.clone();
    for c in cs {
        out = apply_corruption(&out, c, map)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_roundtrip() {
        for s in [
            "break:Acom:1.5",
            "break:BA:2:4,5,6",
            "drop:L-Pcom",
            "blob:BA:1:0,0,-3.5",
            "swap:L-ACA:R-ACA:1,2,3:4,5,6",
            "morph:R-ICA:+2",
            "morph:R-ICA:-1",
        ] {
            let c: Corruption = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        for bad in ["break:Acom", "drop:XX", "blob:BA:1:0,0", "twist:BA", "morph:BA:x"] {
            assert!(bad.parse::<Corruption>().is_err(), "{bad}");
        }
    }

    #[test]
    fn serde_tagging() {
        let c = Corruption::DropClass { vessel: Vessel::LPcom };
        let j = serde_json::to_string(&c).unwrap();
        assert_eq!(j, r#"{"kind":"drop-class","vessel":"L-Pcom"}"#);
        assert_eq!(serde_json::from_str::<Corruption>(&j).unwrap(), c);
    }

    fn rod(len: usize, label: u8) -> LabelVolume {
        let mut v = LabelVolume::zeros([len, 5, 5]);
        for x in 1..len - 1 {
            v.set([x, 2, 2], label);
        }
        v
    }

    #[test]
    fn break_cuts_a_rod() {
        let map = LabelMap::default();
        let v = rod(21, 1);
        let c = Corruption::Break {
            vessel: Vessel::Ba,
            gap_mm: 3.0,
            at: None,
        };
        let out = apply_corruption(&v, &c, &map).unwrap();
        // The median is x = 10; three voxels lie within 1.5 mm of it.
        assert_eq!(out.foreground_count(), v.foreground_count() - 3);
        assert_eq!(out.get([10, 2, 2]), 0);
        assert_eq!(out.get([8, 2, 2]), 1);
    }

    #[test]
    fn dilate_then_erode_rod() {
        let map = LabelMap::default();
        let v = rod(11, 1);
        let grown = apply_corruption(&v, &Corruption::DilateErode { vessel: Vessel::Ba, steps: 1 }, &map).unwrap();
        assert_eq!(grown.foreground_count(), 9 + 4 * 9 + 2);
        let shrunk = apply_corruption(&grown, &Corruption::DilateErode { vessel: Vessel::Ba, steps: -1 }, &map).unwrap();
        // Caps and the face ring go; the original core survives.
        assert_eq!(shrunk.foreground_count(), 9);
    }

    #[test]
    fn swap_exchanges_labels_in_region() {
        let map = LabelMap::default();
        let mut v = LabelVolume::zeros([4, 1, 1]);
        v.data_mut().copy_from_slice(&[1, 2, 1, 2]);
        let c = Corruption::CrossoverSwap {
            a: Vessel::Ba,
            b: Vessel::RPca,
            region: RoiBox::new([0, 0, 0], [2, 1, 1]),
        };
        assert_eq!(apply_corruption(&v, &c, &map).unwrap().data(), &[2, 1, 1, 2]);
        let outside = Corruption::CrossoverSwap {
            a: Vessel::Ba,
            b: Vessel::RPca,
            region: RoiBox::new([3, 0, 0], [2, 1, 1]),
        };
        assert!(apply_corruption(&v, &outside, &map).is_err());
    }

    #[test]
    fn blob_needs_background() {
        let map = LabelMap::default();
        let v = LabelVolume::filled([3, 3, 3], [1.0; 3], 1);
        let c = Corruption::FloatingBlob {
            vessel: Vessel::Ba,
            radius_mm: 1.0,
            offset_mm: [0.0; 3],
        };
        assert!(apply_corruption(&v, &c, &map).is_err());
    }
}
