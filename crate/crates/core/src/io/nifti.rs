//! NIfTI-1 single-file (`.nii`, `.nii.gz`) reader and writer for 3-D
//! scalar volumes.
//!
//! The affine comes from the sform when `sform_code > 0`, else from the
//! qform quaternion when `qform_code > 0`, else from `pixdim` alone.
//! Intensity scaling (`scl_slope`/`scl_inter`) is applied on read.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian, WriteBytesExt};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use nalgebra::{Matrix3, Matrix4};

use crate::error::{Error, Result};
use crate::volume::{Grid, LabelVolume, Volume};

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    U8,
    I16,
    I32,
    F32,
    F64,
    U16,
}

impl DataType {
    pub fn code(self) -> i16 {
        match self {
            DataType::U8 => 2,
            DataType::I16 => 4,
            DataType::I32 => 8,
            DataType::F32 => 16,
            DataType::F64 => 64,
            DataType::U16 => 512,
        }
    }

    pub fn from_code(code: i16) -> Option<Self> {
        Some(match code {
            2 => DataType::U8,
            4 => DataType::I16,
            8 => DataType::I32,
            16 => DataType::F32,
            64 => DataType::F64,
            512 => DataType::U16,
            _ => return None,
        })
    }

    pub fn bytes(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::I16 | DataType::U16 => 2,
            DataType::I32 | DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }
}

/// Header fields that matter for a faithful rewrite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NiftiMeta {
    pub datatype: DataType,
    pub scl_slope: f64,
    pub scl_inter: f64,
    pub qform_code: i16,
    pub sform_code: i16,
    pub xyzt_units: u8,
}

impl NiftiMeta {
    pub fn new(datatype: DataType) -> Self {
        Self {
            datatype,
            scl_slope: 1.0,
            scl_inter: 0.0,
            qform_code: 1,
            sform_code: 1,
            // mm + seconds
            xyzt_units: 2 | 8,
        }
    }

    fn scaling(&self) -> Option<(f64, f64)> {
        (self.scl_slope != 0.0 && (self.scl_slope != 1.0 || self.scl_inter != 0.0))
            .then_some((self.scl_slope, self.scl_inter))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NiftiImage {
    pub volume: Volume,
    pub meta: NiftiMeta,
}

impl NiftiImage {
    /// Interprets the voxel values as integer label codes.
    pub fn into_labels(self, path: &Path) -> Result<LabelVolume> {
        let grid = self.volume.grid().clone();
        let data = self
            .volume
            .into_data()
            .into_iter()
            .map(|v| {
                if v.fract() == 0.0 && (0.0..=u16::MAX as f64).contains(&v) {
                    Ok(v as u16)
                } else {
                    Err(Error::format(
                        path,
                        format!("label value {v} is not a code in 0..=65535"),
                    ))
                }
            })
            .collect::<Result<Vec<u16>>>()?;
        Volume::new(grid, data)
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::format(path, format!("gzip: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Quaternion (b, c, d) plus offsets and pixdim to an affine.
pub fn quaternion_to_affine(quat: [f64; 3], offset: [f64; 3], pixdim: [f64; 3], qfac: f64) -> Matrix4<f64> {
    let [b, c, d] = quat;
    let a2 = 1.0 - (b * b + c * c + d * d);
    let (a, b, c, d) = if a2 < 1e-7 {
        // 180 degree rotation: renormalize (b, c, d)
        let n = (b * b + c * c + d * d).sqrt();
        (0.0, b / n, c / n, d / n)
    } else {
        (a2.sqrt(), b, c, d)
    };
    #[rustfmt::skip]
    let r = Matrix3::new(
        a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d),         2.0 * (b * d + a * c),
        2.0 * (b * c + a * d),         a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b),
        2.0 * (b * d - a * c),         2.0 * (c * d + a * b),         a * a + d * d - c * c - b * b,
    );
    let qfac = if qfac < 0.0 { -1.0 } else { 1.0 };
    let scale = [pixdim[0], pixdim[1], pixdim[2] * qfac];
    let mut m = Matrix4::identity();
    for row in 0..3 {
        for col in 0..3 {
            m[(row, col)] = r[(row, col)] * scale[col];
        }
        m[(row, 3)] = offset[row];
    }
    m
}

/// `(quat, offset, pixdim, qfac)` as stored in a NIfTI qform.
pub type QformParts = ([f64; 3], [f64; 3], [f64; 3], f64);

/// Inverse of [`quaternion_to_affine`] for affines with orthogonal axes.
/// Returns `(quat, offset, pixdim, qfac)`, or `None` for sheared affines.
pub fn affine_to_quaternion(m: &Matrix4<f64>) -> Option<QformParts> {
    let mut r = m.fixed_view::<3, 3>(0, 0).into_owned();
    let mut pixdim = [0.0; 3];
    for (col, p) in pixdim.iter_mut().enumerate() {
        *p = r.column(col).norm();
        r.column_mut(col).unscale_mut(*p);
    }
    let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
    if ortho > 1e-4 {
        return None;
    }
    let qfac = if r.determinant() < 0.0 {
        r.column_mut(2).neg_mut();
        -1.0
    } else {
        1.0
    };
    let (r11, r12, r13) = (r[(0, 0)], r[(0, 1)], r[(0, 2)]);
    let (r21, r22, r23) = (r[(1, 0)], r[(1, 1)], r[(1, 2)]);
    let (r31, r32, r33) = (r[(2, 0)], r[(2, 1)], r[(2, 2)]);
    let trace = r11 + r22 + r33 + 1.0;
    let (a, mut b, mut c, mut d);
    if trace > 0.5 {
        a = 0.5 * trace.sqrt();
        b = 0.25 * (r32 - r23) / a;
        c = 0.25 * (r13 - r31) / a;
        d = 0.25 * (r21 - r12) / a;
    } else {
        let xd = 1.0 + r11 - (r22 + r33);
        let yd = 1.0 + r22 - (r11 + r33);
        let zd = 1.0 + r33 - (r11 + r22);
        if xd > 1.0 {
            b = 0.5 * xd.sqrt();
            c = 0.25 * (r12 + r21) / b;
            d = 0.25 * (r13 + r31) / b;
            a = 0.25 * (r32 - r23) / b;
        } else if yd > 1.0 {
            c = 0.5 * yd.sqrt();
            b = 0.25 * (r12 + r21) / c;
            d = 0.25 * (r23 + r32) / c;
            a = 0.25 * (r13 - r31) / c;
        } else {
            d = 0.5 * zd.sqrt();
            b = 0.25 * (r13 + r31) / d;
            c = 0.25 * (r23 + r32) / d;
            a = 0.25 * (r21 - r12) / d;
        }
        if a < 0.0 {
            b = -b;
            c = -c;
            d = -d;
        }
    }
    Some(([b, c, d], [m[(0, 3)], m[(1, 3)], m[(2, 3)]], pixdim, qfac))
}

struct Header<'a, B: ByteOrder> {
    bytes: &'a [u8],
    _order: std::marker::PhantomData<B>,
}

impl<B: ByteOrder> Header<'_, B> {
    fn i16(&self, off: usize) -> i16 {
        B::read_i16(&self.bytes[off..])
    }
    fn f32(&self, off: usize) -> f64 {
        B::read_f32(&self.bytes[off..]) as f64
    }
}

pub fn read_nifti(path: &Path) -> Result<NiftiImage> {
    let bytes = read_all(path)?;
    if bytes.len() < HEADER_SIZE {
        return Err(Error::format(path, "file shorter than a NIfTI-1 header"));
    }
    if LittleEndian::read_i32(&bytes) == HEADER_SIZE as i32 {
        parse::<LittleEndian>(path, &bytes)
    } else if BigEndian::read_i32(&bytes) == HEADER_SIZE as i32 {
        parse::<BigEndian>(path, &bytes)
    } else {
        Err(Error::format(path, "sizeof_hdr is not 348"))
    }
}

fn parse<B: ByteOrder>(path: &Path, bytes: &[u8]) -> Result<NiftiImage> {
    let h = Header::<B> {
        bytes,
        _order: std::marker::PhantomData,
    };
    if &bytes[344..348] != b"n+1\0" {
        return Err(Error::format(
            path,
            "magic is not \"n+1\" (only single-file NIfTI-1 is supported)",
        ));
    }
    let ndim = h.i16(40);
    if !(1..=7).contains(&ndim) {
        return Err(Error::format(path, format!("dim[0] = {ndim} out of range")));
    }
    let mut shape = [1usize; 3];
    for d in 1..=ndim as usize {
        let n = h.i16(40 + 2 * d);
        if n < 1 {
            return Err(Error::format(path, format!("dim[{d}] = {n}")));
        }
        if d <= 3 {
            shape[d - 1] = n as usize;
        } else if n != 1 {
            return Err(Error::format(
                path,
                format!("{ndim}-D data with dim[{d}] = {n} is not a 3-D volume"),
            ));
        }
    }
    let code = h.i16(70);
    let datatype =
        DataType::from_code(code).ok_or_else(|| Error::format(path, format!("unsupported datatype {code}")))?;
    let vox_offset = h.f32(108);
    if vox_offset.is_nan() || vox_offset < HEADER_SIZE as f64 {
        return Err(Error::format(
            path,
            format!("vox_offset {vox_offset} is inside the header"),
        ));
    }
    let vox_offset = vox_offset as usize;
    let pixdim: Vec<f64> = (0..8).map(|i| h.f32(76 + 4 * i)).collect();
    let meta = NiftiMeta {
        datatype,
        scl_slope: h.f32(112),
        scl_inter: h.f32(116),
        qform_code: h.i16(252),
        sform_code: h.i16(254),
        xyzt_units: bytes[123],
    };

    let affine = if meta.sform_code > 0 {
        let mut m = Matrix4::identity();
        for row in 0..3 {
            for col in 0..4 {
                m[(row, col)] = h.f32(280 + 16 * row + 4 * col);
            }
        }
        m
    } else if meta.qform_code > 0 {
        quaternion_to_affine(
            [h.f32(256), h.f32(260), h.f32(264)],
            [h.f32(268), h.f32(272), h.f32(276)],
            [pixdim[1], pixdim[2], pixdim[3]],
            pixdim[0],
        )
    } else {
        let mut m = Matrix4::identity();
        for a in 0..3 {
            m[(a, a)] = if pixdim[a + 1] > 0.0 { pixdim[a + 1] } else { 1.0 };
        }
        m
    };
    let grid = Grid::new(shape, affine).map_err(|e| Error::format(path, e.to_string()))?;

    let n = grid.len();
    let width = datatype.bytes();
    let end = vox_offset + n * width;
    if bytes.len() < end {
        return Err(Error::format(
            path,
            format!(
                "expected {} data bytes, found {}",
                n * width,
                bytes.len().saturating_sub(vox_offset)
            ),
        ));
    }
    let raw = &bytes[vox_offset..end];
    let mut data: Vec<f64> = match datatype {
        DataType::U8 => raw.iter().map(|&b| b as f64).collect(),
        DataType::I16 => raw.chunks_exact(2).map(|c| B::read_i16(c) as f64).collect(),
        DataType::U16 => raw.chunks_exact(2).map(|c| B::read_u16(c) as f64).collect(),
        DataType::I32 => raw.chunks_exact(4).map(|c| B::read_i32(c) as f64).collect(),
        DataType::F32 => raw.chunks_exact(4).map(|c| B::read_f32(c) as f64).collect(),
        DataType::F64 => raw.chunks_exact(8).map(|c| B::read_f64(c)).collect(),
    };
    if let Some((slope, inter)) = meta.scaling() {
        for v in &mut data {
            *v = *v * slope + inter;
        }
    }
    Ok(NiftiImage {
        volume: Volume::new(grid, data)?,
        meta,
    })
}

pub fn read_nifti_labels(path: &Path) -> Result<LabelVolume> {
    read_nifti(path)?.into_labels(path)
}

fn encode_header(vol: &Volume, meta: &NiftiMeta) -> Vec<u8> {
    let mut h = vec![0u8; VOX_OFFSET];
    let le = |buf: &mut [u8], off: usize, v: f64| LittleEndian::write_f32(&mut buf[off..], v as f32);
    LittleEndian::write_i32(&mut h[0..], HEADER_SIZE as i32);
    h[38] = b'r';
    let shape = vol.shape();
    LittleEndian::write_i16(&mut h[40..], 3);
    for (d, &n) in shape.iter().enumerate() {
        LittleEndian::write_i16(&mut h[42 + 2 * d..], n as i16);
    }
    for d in 4..8 {
        LittleEndian::write_i16(&mut h[40 + 2 * d..], 1);
    }
    LittleEndian::write_i16(&mut h[70..], meta.datatype.code());
    LittleEndian::write_i16(&mut h[72..], (meta.datatype.bytes() * 8) as i16);

    let affine = vol.affine();
    let spacing = vol.spacing();
    let quat = if meta.qform_code > 0 {
        affine_to_quaternion(affine)
    } else {
        None
    };
    le(&mut h, 76, quat.map_or(1.0, |q| q.3));
    for (a, &s) in spacing.iter().enumerate() {
        le(&mut h, 80 + 4 * a, s);
    }
    le(&mut h, 108, VOX_OFFSET as f64);
    le(&mut h, 112, meta.scl_slope);
    le(&mut h, 116, meta.scl_inter);
    h[123] = meta.xyzt_units;
    if let Some((q, offset, _, _)) = quat {
        LittleEndian::write_i16(&mut h[252..], meta.qform_code);
        for i in 0..3 {
            le(&mut h, 256 + 4 * i, q[i]);
            le(&mut h, 268 + 4 * i, offset[i]);
        }
    }
    LittleEndian::write_i16(&mut h[254..], meta.sform_code.max(1));
    for row in 0..3 {
        for col in 0..4 {
            le(&mut h, 280 + 16 * row + 4 * col, affine[(row, col)]);
        }
    }
    h[344..348].copy_from_slice(b"n+1\0");
    h
}

/// Writes `vol` with the datatype and scaling in `meta`; values are
/// unscaled, rounded (integer types) and range-checked.
pub fn write_nifti_with(vol: &Volume, path: &Path, meta: &NiftiMeta) -> Result<()> {
    let mut buf = encode_header(vol, meta);
    buf.reserve(vol.data().len() * meta.datatype.bytes());
    let (slope, inter) = meta.scaling().unwrap_or((1.0, 0.0));
    let range = |lo: f64, hi: f64, v: f64| -> Result<f64> {
        let r = v.round();
        if r < lo || r > hi || !v.is_finite() {
            Err(Error::format(
                path,
                format!("value {v} does not fit {:?}", meta.datatype),
            ))
        } else {
            Ok(r)
        }
    };
    for &v in vol.data() {
        let raw = if (slope, inter) == (1.0, 0.0) {
            v
        } else {
            (v - inter) / slope
        };
        match meta.datatype {
            DataType::U8 => buf.push(range(0.0, 255.0, raw)? as u8),
            DataType::I16 => buf
                .write_i16::<LittleEndian>(range(i16::MIN as f64, i16::MAX as f64, raw)? as i16)
                .unwrap(),
            DataType::U16 => buf
                .write_u16::<LittleEndian>(range(0.0, u16::MAX as f64, raw)? as u16)
                .unwrap(),
            DataType::I32 => buf
                .write_i32::<LittleEndian>(range(i32::MIN as f64, i32::MAX as f64, raw)? as i32)
                .unwrap(),
            DataType::F32 => buf.write_f32::<LittleEndian>(raw as f32).unwrap(),
            DataType::F64 => buf.write_f64::<LittleEndian>(raw).unwrap(),
        }
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let gz = path.extension().is_some_and(|e| e == "gz");
    let result = if gz {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::new(6));
        enc.write_all(&buf).and_then(|_| enc.finish()?.flush())
    } else {
        let mut w = BufWriter::new(file);
        w.write_all(&buf).and_then(|_| w.flush())
    };
    result.map_err(|e| Error::io(path, e))
}

pub fn write_nifti(vol: &Volume, path: &Path, datatype: DataType) -> Result<()> {
    write_nifti_with(vol, path, &NiftiMeta::new(datatype))
}

/// Labels are stored as u8 when every code fits, u16 otherwise.
pub fn write_nifti_labels(vol: &LabelVolume, path: &Path) -> Result<()> {
    let dt = if vol.data().iter().all(|&v| v <= u8::MAX as u16) {
        DataType::U8
    } else {
        DataType::U16
    };
    write_nifti(&vol.map(|v| v as f64), path, dt)
}
