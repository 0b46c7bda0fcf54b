//! LIDE-v1 binary layout, little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "LIDE"
//!      4     2  version (1)
//!      6     2  flags, bit0 set = float64 payload, clear = float32
//!      8     8  n_points
//!     16     4  dim
//!     20     4  reserved (0)
//!     24     -  row-major payload
//! ```
//!
//! Metadata lives in an optional `<stem>.meta.jsonl` sidecar, one JSON object
//! per point.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{PointCloud, Precision, TokenMeta};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"LIDE";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;

const FLAG_F64: u16 = 0b1;

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Drop a sidecar whose line count does not match instead of failing.
    pub permissive_meta: bool,
}

/// `dir/name.lide` -> `dir/name.meta.jsonl`
pub fn meta_sidecar_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.jsonl"))
}

pub fn save_point_cloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let flags = match cloud.precision() {
        Precision::F32 => 0,
        Precision::F64 => FLAG_F64,
    };
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    header.extend_from_slice(&flags.to_le_bytes());
    header.extend_from_slice(&(cloud.n_points() as u64).to_le_bytes());
    header.extend_from_slice(&(cloud.dim() as u32).to_le_bytes());
    header.extend_from_slice(&0u32.to_le_bytes());
    w.write_all(&header).map_err(|e| Error::io(path, e))?;

    match cloud.precision() {
        Precision::F32 => {
            for &v in cloud.data() {
                w.write_all(&(v as f32).to_le_bytes())
                    .map_err(|e| Error::io(path, e))?;
            }
        }
        Precision::F64 => {
            for &v in cloud.data() {
                w.write_all(&v.to_le_bytes())
                    .map_err(|e| Error::io(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let sidecar = meta_sidecar_path(path);
    match cloud.meta() {
        Some(meta) => write_sidecar(&sidecar, meta)?,
        None => {
            // a stale sidecar would be attached on the next load
            if sidecar.exists() {
                std::fs::remove_file(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            }
        }
    }
    Ok(())
}

fn write_sidecar(path: &Path, meta: &[TokenMeta]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for m in meta {
        let line = serde_json::to_string(m).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_point_cloud(path: &Path) -> Result<PointCloud> {
    load_point_cloud_with(path, LoadOptions::default())
}

pub fn load_point_cloud_with(path: &Path, opts: LoadOptions) -> Result<PointCloud> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;

    let (precision, n_points, dim) =
        parse_header(&bytes).map_err(|msg| Error::Format(format!("{}: {msg}", path.display())))?;
    let width = match precision {
        Precision::F32 => 4,
        Precision::F64 => 8,
    };
    let expected = n_points
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(width))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format(format!("{}: header sizes overflow", path.display())))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "{}: expected {expected} bytes for {n_points}x{dim} payload, found {}",
            path.display(),
            bytes.len()
        )));
    }

    let payload = &bytes[HEADER_LEN..];
    let data: Vec<f64> = match precision {
        Precision::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Precision::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    let cloud = PointCloud::new(dim, data, precision).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })?;

    let sidecar = meta_sidecar_path(path);
    if !sidecar.exists() {
        return Ok(cloud);
    }
    let meta = read_sidecar(&sidecar)?;
    match cloud.clone().with_meta(meta) {
        Ok(c) => Ok(c),
        Err(e) if opts.permissive_meta => {
            log::warn!("ignoring metadata sidecar {}: {e}", sidecar.display());
            Ok(cloud)
        }
        Err(Error::Metadata(msg)) => Err(Error::Metadata(format!("{}: {msg}", sidecar.display()))),
        Err(e) => Err(e),
    }
}

fn parse_header(bytes: &[u8]) -> std::result::Result<(Precision, usize, usize), String> {
    if bytes.len() < HEADER_LEN {
        return Err(format!("file shorter than the {HEADER_LEN}-byte header"));
    }
    if bytes[0..4] != MAGIC {
        return Err(format!("bad magic {:02X?}", &bytes[0..4]));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let flags = u16::from_le_bytes([bytes[6], bytes[7]]);
    if flags & !FLAG_F64 != 0 {
        return Err(format!("unknown flag bits {flags:#06x}"));
    }
    let precision = if flags & FLAG_F64 != 0 {
        Precision::F64
    } else {
        Precision::F32
    };
    let n_points = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
    let reserved = u32::from_le_bytes(bytes[20..24].try_into().unwrap());
    if reserved != 0 {
        return Err(format!("reserved field is {reserved}, expected 0"));
    }
    if dim == 0 {
        return Err("dim is 0".into());
    }
    let n_points = usize::try_from(n_points).map_err(|_| "n_points overflows usize".to_string())?;
    Ok((precision, n_points, dim as usize))
}

fn read_sidecar(path: &Path) -> Result<Vec<TokenMeta>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut meta = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let m: TokenMeta = serde_json::from_str(&line)
            .map_err(|e| Error::Metadata(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        meta.push(m);
    }
    Ok(meta)
}
