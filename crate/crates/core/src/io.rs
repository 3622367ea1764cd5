//! Bit-exact file formats.
//!
//! Raster format "ASNR v1": magic bytes `ASNR`, little-endian u32 fields
//! version (=1), width, height, channels, dtype tag (1 = f32, 2 = u8 mask,
//! 3 = i32 segments), then the row-major channel-interleaved payload.
//! Scalars are f32 on disk and converted to the in-memory scalar type on
//! load. Validity masks live in a companion file `<stem>.mask.asnr`.
//!
//! Intrinsics are UTF-8 text with one `key = value` line per field; unknown
//! keys are rejected. Results are CSV with a header row; floats carry nine
//! significant digits, and a leading comment line records the producing
//! command.

use std::fs;
use std::path::{Path, PathBuf};

use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::raster::{DepthMap, GuidanceFeatureMap, NormalMap, SegmentMap};
use crate::scalar::Scalar;

pub const MAGIC: [u8; 4] = *b"ASNR";
pub const VERSION: u32 = 1;

/// Payload of a raw raster file.
#[derive(Clone, Debug, PartialEq)]
pub enum RasterData {
    F32(Vec<f32>),
    MaskU8(Vec<u8>),
    I32(Vec<i32>),
}

impl RasterData {
    fn dtype_tag(&self) -> u32 {
        match self {
            RasterData::F32(_) => 1,
            RasterData::MaskU8(_) => 2,
            RasterData::I32(_) => 3,
        }
    }

    fn elem_size(tag: u32) -> Option<usize> {
        match tag {
            1 | 3 => Some(4),
            2 => Some(1),
            _ => None,
        }
    }

    fn len(&self) -> usize {
        match self {
            RasterData::F32(v) => v.len(),
            RasterData::MaskU8(v) => v.len(),
            RasterData::I32(v) => v.len(),
        }
    }
}

/// An ASNR raster: header fields plus payload.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRaster {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
    pub data: RasterData,
}

impl RawRaster {
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Writes `bytes` to `path` atomically (temp file in the same directory, then
/// rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temp_path(path);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn write_raster(raster: &RawRaster, path: &Path) -> Result<()> {
    let expected = raster.pixel_count() * raster.channels as usize;
    if raster.data.len() != expected {
        return Err(Error::contract(format!(
            "write_raster: payload has {} elements but header declares {}",
            raster.data.len(),
            expected
        )));
    }
    let elem = RasterData::elem_size(raster.data.dtype_tag()).unwrap();
    let mut bytes = Vec::with_capacity(24 + raster.data.len() * elem);
    bytes.extend_from_slice(&MAGIC);
    for field in [
        VERSION,
        raster.width,
        raster.height,
        raster.channels,
        raster.data.dtype_tag(),
    ] {
        bytes.extend_from_slice(&field.to_le_bytes());
    }
    match &raster.data {
        RasterData::F32(v) => {
            for x in v {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
        RasterData::MaskU8(v) => bytes.extend_from_slice(v),
        RasterData::I32(v) => {
            for x in v {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    write_atomic(path, &bytes)
}

fn read_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::parse(offset, format!("truncated {what} field")));
    }
    Ok(u32::from_le_bytes(bytes[offset..end].try_into().unwrap()))
}

pub fn read_raster(path: &Path) -> Result<RawRaster> {
    let bytes = fs::read(path)?;
    parse_raster(&bytes)
}

pub fn parse_raster(bytes: &[u8]) -> Result<RawRaster> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::parse(0, "bad magic, expected ASNR"));
    }
    let version = read_u32(bytes, 4, "version")?;
    if version != VERSION {
        return Err(Error::parse(4, format!("unsupported version {version}")));
    }
    let width = read_u32(bytes, 8, "width")?;
    let height = read_u32(bytes, 12, "height")?;
    let channels = read_u32(bytes, 16, "channels")?;
    let dtype = read_u32(bytes, 20, "dtype")?;
    let elem = RasterData::elem_size(dtype)
        .ok_or_else(|| Error::parse(20, format!("unknown dtype tag {dtype}")))?;
    let count = (width as u64)
        .checked_mul(height as u64)
        .and_then(|n| n.checked_mul(channels as u64))
        .filter(|&n| n <= usize::MAX as u64 / elem as u64)
        .ok_or_else(|| Error::parse(8, "dimension overflow"))? as usize;
    let expected = 24 + count * elem;
    if bytes.len() != expected {
        return Err(Error::parse(
            24,
            format!(
                "payload length {} disagrees with declared {}",
                bytes.len() - 24.min(bytes.len()),
                expected - 24
            ),
        ));
    }
    let payload = &bytes[24..];
    let data = match dtype {
        1 => RasterData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        2 => RasterData::MaskU8(payload.to_vec()),
        3 => RasterData::I32(
            payload
                .chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        _ => unreachable!(),
    };
    Ok(RawRaster {
        width,
        height,
        channels,
        data,
    })
}

/// Companion mask path of a raster: `foo.asnr` -> `foo.mask.asnr`.
pub fn mask_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    let mut name = stem;
    name.push(".mask.asnr");
    path.with_file_name(name)
}

fn write_mask(valid: &[bool], width: usize, height: usize, path: &Path) -> Result<()> {
    let raster = RawRaster {
        width: width as u32,
        height: height as u32,
        channels: 1,
        data: RasterData::MaskU8(valid.iter().map(|&b| b as u8).collect()),
    };
    write_raster(&raster, path)
}

fn read_mask(path: &Path, width: usize, height: usize) -> Result<Option<Vec<bool>>> {
    let mpath = mask_path(path);
    if !mpath.exists() {
        return Ok(None);
    }
    let raster = read_raster(&mpath)?;
    if raster.width as usize != width || raster.height as usize != height || raster.channels != 1 {
        return Err(Error::contract(
            "mask companion dimensions disagree with raster",
        ));
    }
    match raster.data {
        RasterData::MaskU8(v) => Ok(Some(v.into_iter().map(|b| b != 0).collect())),
        _ => Err(Error::contract("mask companion must have dtype 2")),
    }
}

/// Writes a depth map as a 1-channel f32 raster, plus a mask companion when
/// any pixel is invalid.
pub fn write_depth<T: Scalar>(depth: &DepthMap<T>, path: &Path) -> Result<()> {
    let raster = RawRaster {
        width: depth.width() as u32,
        height: depth.height() as u32,
        channels: 1,
        data: RasterData::F32(
            depth
                .values()
                .iter()
                .map(|v| v.to_f64_lossy() as f32)
                .collect(),
        ),
    };
    write_raster(&raster, path)?;
    if !depth.all_valid() {
        write_mask(
            depth.mask(),
            depth.width(),
            depth.height(),
            &mask_path(path),
        )?;
    }
    Ok(())
}

pub fn read_depth<T: Scalar>(path: &Path) -> Result<DepthMap<T>> {
    let raster = read_raster(path)?;
    if raster.channels != 1 {
        return Err(Error::contract("depth raster must have one channel"));
    }
    let RasterData::F32(values) = raster.data else {
        return Err(Error::contract("depth raster must have dtype 1 (f32)"));
    };
    let (w, h) = (raster.width as usize, raster.height as usize);
    let valid = read_mask(path, w, h)?.unwrap_or_else(|| vec![true; w * h]);
    DepthMap::new(
        w,
        h,
        values.into_iter().map(|v| T::cast(v as f64)).collect(),
        valid,
    )
}

/// Writes a normal map as a 3-channel f32 raster plus mask companion when
/// needed.
pub fn write_normals<T: Scalar>(normals: &NormalMap<T>, path: &Path) -> Result<()> {
    let mut data = Vec::with_capacity(normals.normals().len() * 3);
    for n in normals.normals() {
        data.push(n.x.to_f64_lossy() as f32);
        data.push(n.y.to_f64_lossy() as f32);
        data.push(n.z.to_f64_lossy() as f32);
    }
    let raster = RawRaster {
        width: normals.width() as u32,
        height: normals.height() as u32,
        channels: 3,
        data: RasterData::F32(data),
    };
    write_raster(&raster, path)?;
    if normals.mask().iter().any(|&b| !b) {
        write_mask(
            normals.mask(),
            normals.width(),
            normals.height(),
            &mask_path(path),
        )?;
    }
    Ok(())
}

pub fn read_normals<T: Scalar>(path: &Path) -> Result<NormalMap<T>> {
    let raster = read_raster(path)?;
    if raster.channels != 3 {
        return Err(Error::contract("normal raster must have three channels"));
    }
    let RasterData::F32(values) = raster.data else {
        return Err(Error::contract("normal raster must have dtype 1 (f32)"));
    };
    let (w, h) = (raster.width as usize, raster.height as usize);
    let valid = read_mask(path, w, h)?.unwrap_or_else(|| vec![true; w * h]);
    let normals: Vec<Vec3<T>> = values
        .chunks_exact(3)
        .map(|c| {
            Vec3::new(
                T::cast(c[0] as f64),
                T::cast(c[1] as f64),
                T::cast(c[2] as f64),
            )
        })
        .collect();
    NormalMap::new(w, h, normals, valid)
}

/// Writes a guidance feature map as a C-channel f32 raster.
pub fn write_guidance<T: Scalar>(features: &GuidanceFeatureMap<T>, path: &Path) -> Result<()> {
    let raster = RawRaster {
        width: features.width() as u32,
        height: features.height() as u32,
        channels: features.channels() as u32,
        data: RasterData::F32(
            features
                .features()
                .iter()
                .map(|v| v.to_f64_lossy() as f32)
                .collect(),
        ),
    };
    write_raster(&raster, path)
}

pub fn read_guidance<T: Scalar>(path: &Path) -> Result<GuidanceFeatureMap<T>> {
    let raster = read_raster(path)?;
    let RasterData::F32(values) = raster.data else {
        return Err(Error::contract("guidance raster must have dtype 1 (f32)"));
    };
    GuidanceFeatureMap::new(
        raster.width as usize,
        raster.height as usize,
        raster.channels as usize,
        values.into_iter().map(|v| T::cast(v as f64)).collect(),
    )
}

pub fn write_segments(segments: &SegmentMap, path: &Path) -> Result<()> {
    let raster = RawRaster {
        width: segments.width() as u32,
        height: segments.height() as u32,
        channels: 1,
        data: RasterData::I32(segments.ids().to_vec()),
    };
    write_raster(&raster, path)
}

pub fn read_segments(path: &Path) -> Result<SegmentMap> {
    let raster = read_raster(path)?;
    if raster.channels != 1 {
        return Err(Error::contract("segment raster must have one channel"));
    }
    let RasterData::I32(ids) = raster.data else {
        return Err(Error::contract("segment raster must have dtype 3 (i32)"));
    };
    SegmentMap::new(raster.width as usize, raster.height as usize, ids)
}

const INTRINSICS_KEYS: [&str; 6] = ["fx", "fy", "cx", "cy", "width", "height"];

/// Writes intrinsics as `key = value` text.
pub fn write_intrinsics<T: Scalar>(intr: &Intrinsics<T>, path: &Path) -> Result<()> {
    let text = format!(
        "fx = {}\nfy = {}\ncx = {}\ncy = {}\nwidth = {}\nheight = {}\n",
        intr.fx.to_f64_lossy(),
        intr.fy.to_f64_lossy(),
        intr.cx.to_f64_lossy(),
        intr.cy.to_f64_lossy(),
        intr.width,
        intr.height
    );
    write_atomic(path, text.as_bytes())
}

pub fn read_intrinsics<T: Scalar>(path: &Path) -> Result<Intrinsics<T>> {
    let text = fs::read_to_string(path)?;
    let mut values = [None::<f64>; 6];
    let mut offset = 0usize;
    for line in text.lines() {
        let line_offset = offset;
        offset += line.len() + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| {
            Error::parse(
                line_offset,
                format!("expected 'key = value', got {trimmed:?}"),
            )
        })?;
        let key = key.trim();
        let idx = INTRINSICS_KEYS
            .iter()
            .position(|&k| k == key)
            .ok_or_else(|| Error::parse(line_offset, format!("unknown key {key:?}")))?;
        let parsed: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_offset, format!("invalid number {:?}", value.trim())))?;
        if values[idx].replace(parsed).is_some() {
            return Err(Error::parse(line_offset, format!("duplicate key {key:?}")));
        }
    }
    for (i, v) in values.iter().enumerate() {
        if v.is_none() {
            return Err(Error::parse(
                0,
                format!("missing key {:?}", INTRINSICS_KEYS[i]),
            ));
        }
    }
    Intrinsics::new(
        T::cast(values[0].unwrap()),
        T::cast(values[1].unwrap()),
        T::cast(values[2].unwrap()),
        T::cast(values[3].unwrap()),
        values[4].unwrap() as usize,
        values[5].unwrap() as usize,
    )
}

/// Formats a float with nine significant digits for CSV output.
pub fn fmt_sig9(v: f64) -> String {
    format!("{v:.8e}")
}

/// CSV assembly: provenance comment lines, a header row, data rows.
#[derive(Default, Clone, Debug)]
pub struct Csv {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, text: impl Into<String>) {
        self.comments.push(text.into());
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}
