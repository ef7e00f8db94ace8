//! NIfTI-1 reading and writing for scalar, single-timepoint volumes.
//!
//! Only the formats used by the challenge data are accepted: 8-bit unsigned
//! masks and 16-bit signed images, plus stored types that widen losslessly
//! into them. Volumes are reoriented to LPS+ on load by axis permutation and
//! flipping only; nothing is resampled.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{IntensityVolume, LabelVolume, Volume};
use crate::error::{Error, Result};

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT8: i16 = 256;
const DT_UINT16: i16 = 512;

mod off {
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const DESCRIP: usize = 148;
    pub const QFORM_CODE: usize = 252;
    pub const SFORM_CODE: usize = 254;
    pub const QUATERN_B: usize = 256;
    pub const QOFFSET_X: usize = 268;
    pub const SROW_X: usize = 280;
    pub const MAGIC: usize = 344;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeKind {
    Label,
    Intensity,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyVolume {
    Label(LabelVolume),
    Intensity(IntensityVolume),
}

/// Scalar types that can be written to NIfTI.
pub trait NiftiScalar: Copy {
    const DATATYPE: i16;
    const BITPIX: i16;
    fn put_le(self, out: &mut Vec<u8>);
}

impl NiftiScalar for u8 {
    const DATATYPE: i16 = DT_UINT8;
    const BITPIX: i16 = 8;
    fn put_le(self, out: &mut Vec<u8>) {
        out.push(self);
    }
}

impl NiftiScalar for i16 {
    const DATATYPE: i16 = DT_INT16;
    const BITPIX: i16 = 16;
    fn put_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

pub fn read_volume(path: &Path, kind: VolumeKind) -> Result<AnyVolume> {
    match kind {
        VolumeKind::Label => read_label_volume(path).map(AnyVolume::Label),
        VolumeKind::Intensity => read_intensity_volume(path).map(AnyVolume::Intensity),
    }
}

pub fn read_label_volume(path: &Path) -> Result<LabelVolume> {
    let raw = RawNifti::load(path)?;
    let values: Vec<u8> = match raw.header.datatype {
        DT_UINT8 => raw.payload.clone(),
        DT_INT8 | DT_INT16 | DT_UINT16 => {
            let wide = raw.decode_i32();
            let mut out = Vec::with_capacity(wide.len());
            for v in wide {
                out.push(u8::try_from(v).map_err(|_| Error::BadVolume {
                    path: path.to_path_buf(),
                    reason: format!("label value {v} outside 0..=255"),
                })?);
            }
            out
        }
        dt => {
            return Err(Error::UnsupportedDatatype {
                path: path.to_path_buf(),
                datatype: dt,
            })
        }
    };
    raw.into_volume(values)
}

pub fn read_intensity_volume(path: &Path) -> Result<IntensityVolume> {
    let raw = RawNifti::load(path)?;
    let values: Vec<i16> = match raw.header.datatype {
        DT_UINT8 | DT_INT8 | DT_INT16 => raw.decode_i32().into_iter().map(|v| v as i16).collect(),
        dt => {
            return Err(Error::UnsupportedDatatype {
                path: path.to_path_buf(),
                datatype: dt,
            })
        }
    };
    raw.into_volume(values)
}

/// Writes a single-file NIfTI-1 (`n+1`), little-endian, with an LPS+ affine
/// in both qform and sform. Paths ending in `.gz` are gzip-compressed.
pub fn write_volume<T: NiftiScalar>(vol: &Volume<T>, path: &Path) -> Result<()> {
    let mut bytes = encode_header::<T>(vol);
    bytes.reserve(vol.len() * (T::BITPIX as usize / 8));
    for &v in vol.data() {
        v.put_le(&mut bytes);
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let result = if gz {
        let mut enc = GzEncoder::new(std::io::BufWriter::new(file), Compression::fast());
        enc.write_all(&bytes).and_then(|_| enc.finish()).and_then(|mut w| w.flush())
    } else {
        let mut w = std::io::BufWriter::new(file);
        w.write_all(&bytes).and_then(|_| w.flush())
    };
    result.map_err(|e| Error::io(path, e))
}

fn encode_header<T: NiftiScalar>(vol: &Volume<T>) -> Vec<u8> {
    let mut h = vec![0u8; VOX_OFFSET];
    LittleEndian::write_i32(&mut h[0..4], HEADER_SIZE as i32);
    let dims = vol.dims();
    let mut dim = [1i16; 8];
    dim[0] = 3;
    for a in 0..3 {
        dim[a + 1] = dims[a] as i16;
    }
    for (i, d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut h[off::DIM + 2 * i..], *d);
    }
    LittleEndian::write_i16(&mut h[off::DATATYPE..], T::DATATYPE);
    LittleEndian::write_i16(&mut h[off::BITPIX..], T::BITPIX);
    let sp = vol.spacing();
    let mut pixdim = [0f32; 8];
    pixdim[0] = 1.0;
    for a in 0..3 {
        pixdim[a + 1] = sp[a] as f32;
    }
    for (i, p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut h[off::PIXDIM + 4 * i..], *p);
    }
    LittleEndian::write_f32(&mut h[off::VOX_OFFSET..], VOX_OFFSET as f32);
    LittleEndian::write_f32(&mut h[off::SCL_SLOPE..], 1.0);
    LittleEndian::write_f32(&mut h[off::SCL_INTER..], 0.0);
    h[off::XYZT_UNITS] = 2; // millimetres
    let descrip = b"cowtopo";
    h[off::DESCRIP..off::DESCRIP + descrip.len()].copy_from_slice(descrip);

    // LPS+ voxel axes in RAS world: x and y flip sign.
    let o = vol.origin();
    let ras_origin = [-o[0], -o[1], o[2]];
    LittleEndian::write_i16(&mut h[off::QFORM_CODE..], 1);
    LittleEndian::write_i16(&mut h[off::SFORM_CODE..], 1);
    // 180 degree rotation about z: (b, c, d) = (0, 0, 1).
    LittleEndian::write_f32(&mut h[off::QUATERN_B..], 0.0);
    LittleEndian::write_f32(&mut h[off::QUATERN_B + 4..], 0.0);
    LittleEndian::write_f32(&mut h[off::QUATERN_B + 8..], 1.0);
    for a in 0..3 {
        LittleEndian::write_f32(&mut h[off::QOFFSET_X + 4 * a..], ras_origin[a] as f32);
    }
    let sign = [-1.0, -1.0, 1.0];
    for row in 0..3 {
        let mut srow = [0f32; 4];
        srow[row] = (sign[row] * sp[row]) as f32;
        srow[3] = ras_origin[row] as f32;
        for (c, v) in srow.iter().enumerate() {
            LittleEndian::write_f32(&mut h[off::SROW_X + 16 * row + 4 * c..], *v);
        }
    }
    h[off::MAGIC..off::MAGIC + 4].copy_from_slice(b"n+1\0");
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endian {
    Little,
    Big,
}

#[derive(Debug, Clone)]
struct Header {
    endian: Endian,
    dims: [usize; 3],
    datatype: i16,
    bitpix: i16,
    pixdim: [f64; 8],
    vox_offset: usize,
    /// Voxel-to-RAS affine (3x4), when the header carries one.
    affine: Option<[[f64; 4]; 3]>,
}

struct RawNifti {
    path: PathBuf,
    header: Header,
    /// Stored voxel bytes in file order, exactly `n * bitpix / 8` long.
    payload: Vec<u8>,
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        let mut out = Vec::with_capacity(bytes.len() * 4);
        GzDecoder::new(&bytes[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

fn image_path_for(header_path: &Path) -> Option<PathBuf> {
    let name = header_path.file_name()?.to_str()?;
    let stem = name.strip_suffix(".hdr.gz").or_else(|| name.strip_suffix(".hdr"))?;
    [".img", ".img.gz"]
        .iter()
        .map(|ext| header_path.with_file_name(format!("{stem}{ext}")))
        .find(|p| p.exists())
}

impl RawNifti {
    fn load(path: &Path) -> Result<Self> {
        let bytes = read_maybe_gz(path)?;
        let header = parse_header(path, &bytes)?;
        let voxel_bytes = header.bitpix as usize / 8;
        let n = header.dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let need = n.and_then(|n| n.checked_mul(voxel_bytes)).ok_or_else(|| Error::BadHeader {
            path: path.to_path_buf(),
            reason: format!("dims {:?} overflow", header.dims),
        })?;
        let (source, start) = match &bytes[off::MAGIC..off::MAGIC + 4] {
            b"n+1\0" => (bytes, header.vox_offset),
            _ => {
                let img = image_path_for(path).ok_or_else(|| Error::BadHeader {
                    path: path.to_path_buf(),
                    reason: "two-file header without a matching .img".into(),
                })?;
                (read_maybe_gz(&img)?, header.vox_offset)
            }
        };
        let end = start.checked_add(need).filter(|&e| e <= source.len()).ok_or_else(|| Error::BadVolume {
            path: path.to_path_buf(),
            reason: format!("expected {need} data bytes at offset {start}, file has {}", source.len()),
        })?;
        let payload = source[start..end].to_vec();
        Ok(RawNifti {
            path: path.to_path_buf(),
            header,
            payload,
        })
    }

    fn decode_i32(&self) -> Vec<i32> {
        let p = &self.payload;
        let e = self.header.endian;
        match self.header.datatype {
            DT_UINT8 => p.iter().map(|&b| b as i32).collect(),
            DT_INT8 => p.iter().map(|&b| b as i8 as i32).collect(),
            DT_INT16 => p
                .chunks_exact(2)
                .map(|c| match e {
                    Endian::Little => LittleEndian::read_i16(c),
                    Endian::Big => BigEndian::read_i16(c),
                } as i32)
                .collect(),
            DT_UINT16 => p
                .chunks_exact(2)
                .map(|c| match e {
                    Endian::Little => LittleEndian::read_u16(c),
                    Endian::Big => BigEndian::read_u16(c),
                } as i32)
                .collect(),
            _ => unreachable!("datatype checked by caller"),
        }
    }

    fn into_volume<T: Copy + Default>(self, values: Vec<T>) -> Result<Volume<T>> {
        let h = &self.header;
        let spacing_in = [h.pixdim[1].abs(), h.pixdim[2].abs(), h.pixdim[3].abs()];
        let Some(affine) = h.affine else {
            // No orientation information: the grid is taken as already LPS+.
            return Volume::from_vec(h.dims, spacing_in, values);
        };
        let reorient = Reorientation::from_affine(&affine).ok_or_else(|| Error::BadHeader {
            path: self.path.clone(),
            reason: "affine axes are degenerate".into(),
        })?;
        let out_dims: [usize; 3] = std::array::from_fn(|a| h.dims[reorient.source_axis[a]]);
        let spacing: [f64; 3] = std::array::from_fn(|a| spacing_in[reorient.source_axis[a]]);

        // LPS position of the input voxel that lands at output (0,0,0).
        let mut corner = [0usize; 3];
        for a in 0..3 {
            let j = reorient.source_axis[a];
            corner[j] = if reorient.flip[a] { h.dims[j] - 1 } else { 0 };
        }
        let mut ras = [0f64; 3];
        for (r, row) in affine.iter().enumerate() {
            ras[r] = row[3] + (0..3).map(|j| row[j] * corner[j] as f64).sum::<f64>();
        }
        let origin = [-ras[0], -ras[1], ras[2]];

        let data = if reorient.is_identity() {
            values
        } else {
            permute(&values, h.dims, &reorient)
        };
        Ok(Volume::from_vec(out_dims, spacing, data)?.with_origin(origin))
    }
}

/// Output axis `a` reads input axis `source_axis[a]`, reversed when `flip[a]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Reorientation {
    source_axis: [usize; 3],
    flip: [bool; 3],
}

impl Reorientation {
    fn from_affine(affine: &[[f64; 4]; 3]) -> Option<Self> {
        // RAS -> LPS world: negate the first two rows.
        let lps = |r: usize, c: usize| if r < 2 { -affine[r][c] } else { affine[r][c] };
        let mut source_axis = [usize::MAX; 3];
        let mut flip = [false; 3];
        for j in 0..3 {
            let (world, value) = (0..3)
                .map(|r| (r, lps(r, j)))
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
            if value == 0.0 || source_axis[world] != usize::MAX {
                return None;
            }
            source_axis[world] = j;
            flip[world] = value < 0.0;
        }
        Some(Reorientation { source_axis, flip })
    }

    fn is_identity(&self) -> bool {
        self.source_axis == [0, 1, 2] && self.flip == [false; 3]
    }
}

fn permute<T: Copy + Default>(values: &[T], in_dims: [usize; 3], r: &Reorientation) -> Vec<T> {
    let out_dims: [usize; 3] = std::array::from_fn(|a| in_dims[r.source_axis[a]]);
    let in_stride = [1, in_dims[0], in_dims[0] * in_dims[1]];
    // For each output axis, the input stride and starting offset it walks.
    let mut step = [0isize; 3];
    let mut base = 0isize;
    for a in 0..3 {
        let j = r.source_axis[a];
        let s = in_stride[j] as isize;
        if r.flip[a] {
            step[a] = -s;
            base += (in_dims[j] as isize - 1) * s;
        } else {
            step[a] = s;
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for z in 0..out_dims[2] as isize {
        for y in 0..out_dims[1] as isize {
            let row = base + y * step[1] + z * step[2];
            for x in 0..out_dims[0] as isize {
                out.push(values[(row + x * step[0]) as usize]);
            }
        }
    }
    out
}

fn parse_header(path: &Path, b: &[u8]) -> Result<Header> {
    let bad = |reason: String| Error::BadHeader {
        path: path.to_path_buf(),
        reason,
    };
    if b.len() < HEADER_SIZE {
        return Err(bad(format!("{} bytes, need at least {HEADER_SIZE}", b.len())));
    }
    let endian = if LittleEndian::read_i32(&b[0..4]) == HEADER_SIZE as i32 {
        Endian::Little
    } else if BigEndian::read_i32(&b[0..4]) == HEADER_SIZE as i32 {
        Endian::Big
    } else {
        return Err(bad("sizeof_hdr is not 348".into()));
    };
    let magic = &b[off::MAGIC..off::MAGIC + 4];
    if magic != b"n+1\0" && magic != b"ni1\0" {
        return Err(bad(format!("bad magic {:?}", String::from_utf8_lossy(magic))));
    }
    let i16_at = |o: usize| match endian {
        Endian::Little => LittleEndian::read_i16(&b[o..]),
        Endian::Big => BigEndian::read_i16(&b[o..]),
    };
    let f32_at = |o: usize| match endian {
        Endian::Little => LittleEndian::read_f32(&b[o..]),
        Endian::Big => BigEndian::read_f32(&b[o..]),
    } as f64;

    let dim: [i16; 8] = std::array::from_fn(|i| i16_at(off::DIM + 2 * i));
    let ndim = dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(bad(format!("dim[0] = {ndim}")));
    }
    let mut dims = [1usize; 3];
    for a in 0..3 {
        if (a as i16) < ndim {
            let d = dim[a + 1];
            if d < 1 {
                return Err(bad(format!("dim[{}] = {d}", a + 1)));
            }
            dims[a] = d as usize;
        }
    }
    if (4..=ndim as usize).any(|i| dim[i] > 1) {
        return Err(bad(format!("only scalar single-timepoint volumes are supported (dim = {dim:?})")));
    }

    let datatype = i16_at(off::DATATYPE);
    let bitpix = i16_at(off::BITPIX);
    let expected_bits = match datatype {
        DT_UINT8 | DT_INT8 => 8,
        DT_INT16 | DT_UINT16 => 16,
        _ => {
            return Err(Error::UnsupportedDatatype {
                path: path.to_path_buf(),
                datatype,
            })
        }
    };
    if bitpix != expected_bits {
        return Err(bad(format!("bitpix {bitpix} inconsistent with datatype {datatype}")));
    }

    let pixdim: [f64; 8] = std::array::from_fn(|i| f32_at(off::PIXDIM + 4 * i));
    for a in 1..=3 {
        if !(pixdim[a].abs() > 0.0 && pixdim[a].is_finite()) {
            return Err(bad(format!("pixdim[{a}] = {}", pixdim[a])));
        }
    }
    let slope = f32_at(off::SCL_SLOPE);
    let inter = f32_at(off::SCL_INTER);
    if slope != 0.0 && slope.is_finite() && (slope != 1.0 || inter != 0.0) {
        return Err(Error::BadVolume {
            path: path.to_path_buf(),
            reason: format!("intensity scaling (slope {slope}, intercept {inter}) is not supported"),
        });
    }

    let vox_offset = f32_at(off::VOX_OFFSET);
    let vox_offset = if magic == b"n+1\0" {
        if vox_offset < HEADER_SIZE as f64 {
            return Err(bad(format!("vox_offset {vox_offset}")));
        }
        vox_offset as usize
    } else {
        vox_offset.max(0.0) as usize
    };

    let sform_code = i16_at(off::SFORM_CODE);
    let qform_code = i16_at(off::QFORM_CODE);
    let affine = if sform_code > 0 {
        Some(std::array::from_fn(|r| std::array::from_fn(|c| f32_at(off::SROW_X + 16 * r + 4 * c))))
    } else if qform_code > 0 {
        let q = [
            f32_at(off::QUATERN_B),
            f32_at(off::QUATERN_B + 4),
            f32_at(off::QUATERN_B + 8),
        ];
        let t = [
            f32_at(off::QOFFSET_X),
            f32_at(off::QOFFSET_X + 4),
            f32_at(off::QOFFSET_X + 8),
        ];
        Some(quaternion_affine(q, t, &pixdim))
    } else {
        None
    };

    Ok(Header {
        endian,
        dims,
        datatype,
        bitpix,
        pixdim,
        vox_offset,
        affine,
    })
}

fn quaternion_affine([b, c, d]: [f64; 3], t: [f64; 3], pixdim: &[f64; 8]) -> [[f64; 4]; 3] {
    let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
    let r = [
        [a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c)],
        [2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b)],
        [2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - c * c - b * b],
    ];
    let qfac = if pixdim[0] < 0.0 { -1.0 } else { 1.0 };
    let scale = [pixdim[1].abs(), pixdim[2].abs(), pixdim[3].abs() * qfac];
    std::array::from_fn(|row| {
        let mut out = [0.0; 4];
        for col in 0..3 {
            out[col] = r[row][col] * scale[col];
        }
        out[3] = t[row];
        out
    })
}
