//! On-disk formats.
//!
//! EMB1 (all integers little-endian):
//!
//! ```text
//! "EMB1" | u32 version = 1 | u64 n | u64 d | u32 dtype (0 = f32, 1 = f64) | n*d values, row-major
//! ```
//!
//! LBL1:
//!
//! ```text
//! "LBL1" | u32 version = 1 | u64 n | n i64 labels
//! ```
//!
//! Plain CSV embeddings have no header and `d` numbers per line. Every
//! writer goes through a temporary file in the target directory followed by
//! a rename, so readers never observe a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";
pub const LBL_MAGIC: &[u8; 4] = b"LBL1";
pub const FORMAT_VERSION: u32 = 1;
const EMB_HEADER: usize = 28;
const LBL_HEADER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn code(self) -> u32 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    fn width(self) -> u64 {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

pub fn encode_embeddings(m: &EmbeddingMatrix, dtype: Dtype) -> Vec<u8> {
    let mut out = Vec::with_capacity(EMB_HEADER + m.as_slice().len() * dtype.width() as usize);
    out.extend_from_slice(EMB_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.n() as u64).to_le_bytes());
    out.extend_from_slice(&(m.d() as u64).to_le_bytes());
    out.extend_from_slice(&dtype.code().to_le_bytes());
    for &v in m.as_slice() {
        match dtype {
            Dtype::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
    out
}

/// Parses an EMB1 buffer; `path` is only used in error messages.
pub fn decode_embeddings(bytes: &[u8], path: &Path) -> Result<EmbeddingMatrix> {
    let header = check_header(bytes, path, EMB_MAGIC, EMB_HEADER)?;
    let n = u64_at(header, 8);
    let d = u64_at(header, 16);
    let dtype = match u32_at(header, 24) {
        0 => Dtype::F32,
        1 => Dtype::F64,
        found => return Err(Error::BadDtype { path: path.into(), found }),
    };
    let payload = &bytes[EMB_HEADER..];
    let expected = n.checked_mul(d).and_then(|c| c.checked_mul(dtype.width())).unwrap_or(u64::MAX);
    check_payload(payload.len() as u64, expected, path)?;

    let values: Vec<f64> = match dtype {
        Dtype::F32 => payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(),
        Dtype::F64 => payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
    };
    EmbeddingMatrix::from_vec(n as usize, d as usize, values)
}

pub fn encode_labels(labels: &[i64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(LBL_HEADER + labels.len() * 8);
    out.extend_from_slice(LBL_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(labels.len() as u64).to_le_bytes());
    for l in labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn decode_labels(bytes: &[u8], path: &Path) -> Result<Vec<i64>> {
    let header = check_header(bytes, path, LBL_MAGIC, LBL_HEADER)?;
    let n = u64_at(header, 8);
    let payload = &bytes[LBL_HEADER..];
    check_payload(payload.len() as u64, n.saturating_mul(8), path)?;
    Ok(payload.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn check_header<'a>(bytes: &'a [u8], path: &Path, magic: &[u8; 4], len: usize) -> Result<&'a [u8]> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        return Err(Error::BadMagic {
            path: path.into(),
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(4)]).into_owned(),
        });
    }
    if bytes.len() < len {
        return Err(Error::TruncatedPayload { path: path.into(), expected: len as u64, actual: bytes.len() as u64 });
    }
    let version = u32_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(Error::BadVersion { path: path.into(), found: version });
    }
    Ok(&bytes[..len])
}

fn check_payload(actual: u64, expected: u64, path: &Path) -> Result<()> {
    if actual < expected {
        Err(Error::TruncatedPayload { path: path.into(), expected, actual })
    } else if actual > expected {
        Err(Error::TrailingBytes { path: path.into(), extra: actual - expected })
    } else {
        Ok(())
    }
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    decode_embeddings(&read_bytes(path)?, path)
}

pub fn write_embeddings(m: &EmbeddingMatrix, path: &Path, dtype: Dtype) -> Result<()> {
    write_atomic(path, &encode_embeddings(m, dtype))
}

pub fn read_labels(path: &Path) -> Result<Vec<i64>> {
    decode_labels(&read_bytes(path)?, path)
}

pub fn write_labels(labels: &[i64], path: &Path) -> Result<()> {
    write_atomic(path, &encode_labels(labels))
}

/// Labels as 0-based indices below `num_classes`.
pub fn class_indices(labels: &[i64], num_classes: usize) -> Result<Vec<usize>> {
    labels
        .iter()
        .enumerate()
        .map(|(row, &label)| {
            if label >= 0 && (label as u64) < num_classes as u64 {
                Ok(label as usize)
            } else {
                Err(Error::LabelOutOfRange { row, label, num_classes })
            }
        })
        .collect()
}

pub fn parse_csv_embeddings(text: &str, path: &Path) -> Result<EmbeddingMatrix> {
    let mut values = Vec::new();
    let mut d = None;
    let mut n = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let start = values.len();
        for token in line.split(',') {
            let token = token.trim();
            let v: f64 = token.parse().map_err(|_| Error::ParseError {
                path: path.into(),
                line: line_no,
                token: token.to_string(),
            })?;
            values.push(v);
        }
        let found = values.len() - start;
        match d {
            None => d = Some(found),
            Some(expected) if expected != found => {
                return Err(Error::RaggedRows { path: path.into(), line: line_no, expected, found });
            }
            Some(_) => {}
        }
        n += 1;
    }
    EmbeddingMatrix::from_vec(n, d.unwrap_or(0), values)
}

pub fn read_csv_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|e| {
        Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    })?;
    parse_csv_embeddings(&text, path)
}

/// EMB1 unless the file name ends in `.csv`.
pub fn read_embeddings_auto(path: &Path) -> Result<EmbeddingMatrix> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_csv_embeddings(path)
    } else {
        read_embeddings(path)
    }
}

/// Replaces `path` with `bytes` through a temporary sibling file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir: PathBuf = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
