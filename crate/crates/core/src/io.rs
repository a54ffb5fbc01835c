//! Matrix files: headerless CSV and the `SLRM` little-endian binary format
//! (magic, `u32` version, `u64` rows, `u64` cols, row-major `f64` payload).

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::DenseMatrix;

pub const MAGIC: &[u8; 4] = b"SLRM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Binary,
}

impl MatrixFormat {
    /// `.csv` is CSV, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Binary,
        }
    }
}

impl FromStr for MatrixFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "binary" | "bin" => Ok(Self::Binary),
            other => Err(format!("unknown matrix format '{other}' (csv or binary)")),
        }
    }
}

impl fmt::Display for MatrixFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Binary => "binary",
        })
    }
}

#[derive(Debug, Error)]
pub enum MatrixFileError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing bytes after payload: {0}")]
    TrailingBytes(usize),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("ragged rows: line {line} has {found} fields, expected {expected}")]
    Ragged { line: usize, expected: usize, found: usize },
}

impl MatrixFileError {
    /// Stable numeric code per error kind.
    pub fn code(&self) -> u32 {
        match self {
            Self::Io { .. } => 10,
            Self::BadHeader(_) => 11,
            Self::UnsupportedVersion(_) => 12,
            Self::Truncated { .. } => 13,
            Self::TrailingBytes(_) => 14,
            Self::NonFinite { .. } => 15,
            Self::Parse { .. } => 16,
            Self::Ragged { .. } => 17,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MatrixFileError + '_ {
    move |source| MatrixFileError::Io { path: path.display().to_string(), source }
}

fn check_finite(m: &DenseMatrix) -> Result<(), MatrixFileError> {
    match m.data().iter().position(|v| !v.is_finite()) {
        Some(idx) => Err(MatrixFileError::NonFinite { row: idx / m.cols(), col: idx % m.cols() }),
        None => Ok(()),
    }
}

pub fn read_matrix(path: &Path, format: MatrixFormat) -> Result<DenseMatrix, MatrixFileError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    match format {
        MatrixFormat::Binary => decode_binary(&bytes),
        MatrixFormat::Csv => {
            let text = std::str::from_utf8(&bytes)
                .map_err(|e| MatrixFileError::Parse { line: 0, detail: format!("not UTF-8: {e}") })?;
            parse_csv(text)
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_matrix(path: &Path, m: &DenseMatrix, format: MatrixFormat) -> Result<(), MatrixFileError> {
    check_finite(m)?;
    let bytes = match format {
        MatrixFormat::Binary => encode_binary(m),
        MatrixFormat::Csv => format_csv(m).into_bytes(),
    };
    write_atomic(path, &bytes)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), MatrixFileError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

pub fn encode_binary(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<DenseMatrix, MatrixFileError> {
    if bytes.len() < HEADER_LEN {
        return Err(MatrixFileError::BadHeader(format!("{} bytes, header needs {HEADER_LEN}", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(MatrixFileError::BadHeader(format!("bad magic {:?}", &bytes[..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(MatrixFileError::UnsupportedVersion(version));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| MatrixFileError::BadHeader(format!("dimensions {rows}x{cols} overflow")))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(MatrixFileError::Truncated { expected, found: payload.len() });
    }
    if payload.len() > expected {
        return Err(MatrixFileError::TrailingBytes(payload.len() - expected));
    }
    let data: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let m = DenseMatrix::from_vec(rows as usize, cols as usize, data)
        .map_err(|e| MatrixFileError::BadHeader(e.to_string()))?;
    check_finite(&m)?;
    Ok(m)
}

pub fn parse_csv(text: &str) -> Result<DenseMatrix, MatrixFileError> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field
                .parse()
                .map_err(|_| MatrixFileError::Parse { line: i + 1, detail: format!("cannot parse '{field}'") })?;
            if !v.is_finite() {
                return Err(MatrixFileError::NonFinite { row: rows, col: count });
            }
            data.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => return Err(MatrixFileError::Ragged { line: i + 1, expected: c, found: count }),
            _ => {}
        }
        rows += 1;
    }
    DenseMatrix::from_vec(rows, cols.unwrap_or(0), data).map_err(|e| MatrixFileError::BadHeader(e.to_string()))
}

/// Shortest round-trip decimal representation of each entry.
pub fn format_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
