//! Label and intensity volumes, ROI boxes and the CoW label map.
//!
//! Every volume held in memory is in canonical LPS+ voxel order: the first
//! index grows towards the patient's left, the second towards posterior and
//! the third towards superior. Data is stored x-fastest, matching NIfTI.

mod labels;
mod nifti;
mod roi;

pub use labels::{load_label_map, Group, LabelMap, Vessel};
pub use nifti::{read_intensity_volume, read_label_volume, read_volume, write_volume, AnyVolume, VolumeKind};
pub use roi::{format_roi_records, parse_roi_records, read_roi_file, write_roi_file, RoiRecord};

use crate::error::{Error, Result};

/// A dense 3D grid of voxel values with physical geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    data: Vec<T>,
}

/// Class identifiers, 0 = background.
pub type LabelVolume = Volume<u8>;
/// Signed 16-bit image intensities.
pub type IntensityVolume = Volume<i16>;

impl<T: Copy + Default> Volume<T> {
    /// All-zero volume with unit spacing.
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self::filled(dims, [1.0; 3], T::default())
    }

    pub fn filled(dims: [usize; 3], spacing: [f64; 3], value: T) -> Self {
        let n = dims.iter().product();
        Volume {
            dims,
            spacing,
            origin: [0.0; 3],
            data: vec![value; n],
        }
    }
}

impl<T> Volume<T> {
    pub fn from_vec(dims: [usize; 3], spacing: [f64; 3], data: Vec<T>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidVolume(format!("zero-sized dims {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidVolume(format!("non-positive spacing {spacing:?}")));
        }
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidVolume(format!("dims {dims:?} overflow")))?;
        if n != data.len() {
            return Err(Error::InvalidVolume(format!(
                "data length {} does not match dims {dims:?}",
                data.len()
            )));
        }
        Ok(Volume {
            dims,
            spacing,
            origin: [0.0; 3],
            data,
        })
    }

    pub fn with_origin(mut self, origin: [f64; 3]) -> Self {
        self.origin = origin;
        self
    }

    pub fn with_spacing(mut self, spacing: [f64; 3]) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Millimetres per voxel along each axis.
    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    /// LPS position in millimetres of voxel (0, 0, 0).
    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    /// Axis-direction code of the in-memory layout. Always LPS+.
    pub fn orientation(&self) -> &'static str {
        "LPS"
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, [x, y, z]: [usize; 3]) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.dims[0];
        let yz = idx / self.dims[0];
        [x, yz % self.dims[1], yz / self.dims[1]]
    }

    pub fn contains(&self, p: [i64; 3]) -> bool {
        (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < self.dims[a])
    }

    /// Physical LPS position of a voxel centre.
    pub fn position_mm(&self, p: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|a| self.origin[a] + p[a] as f64 * self.spacing[a])
    }

    pub fn same_grid<U>(&self, other: &Volume<U>) -> Result<()> {
        if self.dims == other.dims {
            Ok(())
        } else {
            Err(Error::DimsMismatch {
                left: self.dims,
                right: other.dims,
            })
        }
    }

    /// New volume on the same grid with values mapped voxelwise.
    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Volume<U> {
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            origin: self.origin,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Copy> Volume<T> {
    #[inline]
    pub fn get(&self, p: [usize; 3]) -> T {
        self.data[self.index(p)]
    }

    #[inline]
    pub fn set(&mut self, p: [usize; 3], v: T) {
        let i = self.index(p);
        self.data[i] = v;
    }

    /// Copy of the sub-block delimited by `roi`.
    pub fn crop(&self, roi: &RoiBox) -> Result<Self> {
        roi.check_within(self.dims)?;
        let [sx, sy, sz] = roi.size;
        let [mx, my, mz] = roi.min;
        let mut data = Vec::with_capacity(sx * sy * sz);
        for z in mz..mz + sz {
            for y in my..my + sy {
                let start = self.index([mx, y, z]);
                data.extend_from_slice(&self.data[start..start + sx]);
            }
        }
        let origin = std::array::from_fn(|a| self.origin[a] + roi.min[a] as f64 * self.spacing[a]);
        Ok(Volume {
            dims: roi.size,
            spacing: self.spacing,
            origin,
            data,
        })
    }
}

impl LabelVolume {
    /// Voxel count per label value.
    pub fn histogram(&self) -> [u64; 256] {
        let mut h = [0u64; 256];
        for &v in &self.data {
            h[v as usize] += 1;
        }
        h
    }

    pub fn foreground_count(&self) -> u64 {
        self.data.iter().filter(|&&v| v != 0).count() as u64
    }

    /// Checks that every nonzero voxel is a class of `map`.
    pub fn check_labels(&self, map: &LabelMap) -> Result<()> {
        let h = self.histogram();
        match (1..256).find(|&v| h[v] > 0 && map.vessel(v as u8).is_none()) {
            Some(v) => Err(Error::UnknownLabel(v as u8)),
            None => Ok(()),
        }
    }
}

/// Crops any volume kind to the ROI.
pub fn crop_to_roi<T: Copy>(vol: &Volume<T>, roi: &RoiBox) -> Result<Volume<T>> {
    vol.crop(roi)
}

/// Binary vessel mask: 1 wherever the input carries any class.
pub fn merge_to_binary(vol: &LabelVolume) -> LabelVolume {
    vol.map(|&v| u8::from(v != 0))
}

/// Axis-aligned box of voxel indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct RoiBox {
    pub min: [usize; 3],
    pub size: [usize; 3],
}

impl RoiBox {
    pub fn new(min: [usize; 3], size: [usize; 3]) -> Self {
        RoiBox { min, size }
    }

    pub fn whole(dims: [usize; 3]) -> Self {
        RoiBox { min: [0; 3], size: dims }
    }

    /// One past the last index along each axis.
    pub fn max_exclusive(&self) -> [usize; 3] {
        std::array::from_fn(|a| self.min[a] + self.size[a])
    }

    pub fn voxel_count(&self) -> usize {
        self.size.iter().product()
    }

    pub fn contains(&self, p: [usize; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] < self.min[a] + self.size[a])
    }

    pub fn check_within(&self, dims: [usize; 3]) -> Result<()> {
        let fits = (0..3).all(|a| {
            self.size[a] >= 1
                && self.min[a]
                    .checked_add(self.size[a])
                    .is_some_and(|end| end <= dims[a])
        });
        if fits {
            Ok(())
        } else {
            Err(Error::RoiOutOfBounds {
                min: self.min,
                size: self.size,
                dims,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(dims: [usize; 3]) -> LabelVolume {
        let n = dims.iter().product::<usize>();
        Volume::from_vec(dims, [1.0; 3], (0..n).map(|i| (i % 251) as u8).collect()).unwrap()
    }

    #[test]
    fn crop_whole_volume_is_identity() {
        let v = ramp([5, 4, 3]);
        let c = v.crop(&RoiBox::whole(v.dims())).unwrap();
        assert_eq!(c, v);
    }

    #[test]
    fn crop_matches_index_oracle() {
        let v = ramp([10, 10, 10]);
        let roi = RoiBox::new([2, 2, 2], [3, 3, 3]);
        let c = crop_to_roi(&v, &roi).unwrap();
        assert_eq!(c.len(), 27);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let src = (2 + i) + 10 * ((2 + j) + 10 * (2 + k));
                    assert_eq!(c.get([i, j, k]), v.data()[src]);
                }
            }
        }
        assert_eq!(c.spacing(), v.spacing());
    }

    #[test]
    fn crop_out_of_bounds_fails() {
        let v = ramp([10, 10, 10]);
        let roi = RoiBox::new([0, 0, 0], [10, 10, 11]);
        assert!(matches!(v.crop(&roi), Err(Error::RoiOutOfBounds { .. })));
        let roi = RoiBox::new([0, 0, 8], [10, 10, 3]);
        assert!(v.crop(&roi).is_err());
    }

    #[test]
    fn merge_counts_all_classes() {
        let mut v = LabelVolume::zeros([6, 6, 6]);
        for (i, &l) in [1u8, 10, 15, 1, 10, 1].iter().enumerate() {
            v.set([i, i % 3, 2], l);
        }
        let h = v.histogram();
        let b = merge_to_binary(&v);
        let fg = b.data().iter().filter(|&&x| x == 1).count() as u64;
        assert_eq!(fg, h[1] + h[10] + h[15]);
        assert_eq!(merge_to_binary(&b), b);
        assert_eq!(merge_to_binary(&LabelVolume::zeros([3, 3, 3])).foreground_count(), 0);
    }

    #[test]
    fn from_vec_rejects_bad_shapes() {
        assert!(LabelVolume::from_vec([2, 2, 2], [1.0; 3], vec![0; 7]).is_err());
        assert!(LabelVolume::from_vec([0, 2, 2], [1.0; 3], vec![]).is_err());
        assert!(LabelVolume::from_vec([1, 1, 1], [0.0, 1.0, 1.0], vec![0]).is_err());
    }

    #[test]
    fn coords_roundtrip() {
        let v = LabelVolume::zeros([7, 5, 3]);
        for i in 0..v.len() {
            assert_eq!(v.index(v.coords(i)), i);
        }
    }
}
