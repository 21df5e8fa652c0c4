//! Dense matrix files: headerless CSV and the `BPLM` binary format.
//!
//! CSV: one row per line, comma-separated decimal floats, 17 significant
//! digits on write so values round-trip exactly.
//!
//! Binary: magic bytes `B P L M`, then rows and cols as unsigned 64-bit
//! little-endian, then `rows * cols` IEEE-754 binary64 little-endian values
//! in row-major order. Total length is exactly `4 + 8 + 8 + 8*rows*cols`.

use std::fs;
use std::io::{self, ErrorKind};
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"BPLM";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Bplm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major values.
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> io::Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix contains a non-finite value".to_string()));
        }
        Ok(Self { rows, cols, data })
    }
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(ErrorKind::InvalidData, msg)
}

/// Reads either format, sniffing the binary magic bytes.
pub fn read_matrix(path: &Path) -> io::Result<Matrix> {
    let bytes = fs::read(path)?;
    if bytes.len() >= 4 && bytes[..4] == MAGIC {
        read_bplm(&bytes)
    } else {
        read_csv(&bytes)
    }
}

fn read_bplm(bytes: &[u8]) -> io::Result<Matrix> {
    if bytes.len() < 20 {
        return Err(invalid("binary matrix file is truncated".to_string()));
    }
    let rows = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let expected = 20usize
        .checked_add(
            rows.checked_mul(cols)
                .and_then(|n| n.checked_mul(8))
                .ok_or_else(|| invalid("binary matrix dimensions overflow".to_string()))?,
        )
        .ok_or_else(|| invalid("binary matrix dimensions overflow".to_string()))?;
    if bytes.len() != expected {
        return Err(invalid(format!(
            "binary matrix file has {} bytes, expected exactly {expected} for {rows}x{cols}",
            bytes.len()
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for chunk in bytes[20..].chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Matrix::new(rows, cols, data)
}

fn read_csv(bytes: &[u8]) -> io::Result<Matrix> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| invalid("CSV matrix file is not valid UTF-8".to_string()))?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut n = 0usize;
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| invalid(format!("line {}: bad float {field:?}", lineno + 1)))?;
            data.push(v);
            n += 1;
        }
        match cols {
            None => cols = Some(n),
            Some(c) if c != n => {
                return Err(invalid(format!(
                    "line {}: {n} fields, previous rows had {c}",
                    lineno + 1
                )))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| invalid("CSV matrix file is empty".to_string()))?;
    Matrix::new(rows, cols, data)
}

pub fn write_matrix(path: &Path, m: &Matrix, format: MatrixFormat) -> io::Result<()> {
    match format {
        MatrixFormat::Csv => write_csv(path, m),
        MatrixFormat::Bplm => write_bplm(path, m),
    }
}

fn write_csv(path: &Path, m: &Matrix) -> io::Result<()> {
    let mut out = String::new();
    for r in 0..m.rows {
        let row = &m.data[r * m.cols..(r + 1) * m.cols];
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out)
}

fn write_bplm(path: &Path, m: &Matrix) -> io::Result<()> {
    let mut bytes = Vec::with_capacity(20 + 8 * m.data.len());
    bytes.extend_from_slice(&MAGIC);
    bytes.extend_from_slice(&(m.rows as u64).to_le_bytes());
    bytes.extend_from_slice(&(m.cols as u64).to_le_bytes());
    for v in &m.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix {
        Matrix::new(2, 3, vec![1.0, 0.05, 1e-300, 2.5e17, 0.1 + 0.2, 4.0 / 3.0]).unwrap()
    }

    #[test]
    fn csv_round_trip_is_value_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = sample();
        write_matrix(&path, &m, MatrixFormat::Csv).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn bplm_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bplm");
        let m = sample();
        write_matrix(&path, &m, MatrixFormat::Bplm).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 4 + 8 + 8 + 8 * 6);
        assert_eq!(&bytes[..4], b"BPLM");
        let back = read_matrix(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn malformed_inputs_are_invalid_data() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        assert_eq!(
            read_matrix(&path).unwrap_err().kind(),
            ErrorKind::InvalidData
        );
        fs::write(&path, "1.0,abc\n").unwrap();
        assert_eq!(
            read_matrix(&path).unwrap_err().kind(),
            ErrorKind::InvalidData
        );
        let bin = dir.path().join("bad.bplm");
        fs::write(&bin, b"BPLM\x01\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert_eq!(
            read_matrix(&bin).unwrap_err().kind(),
            ErrorKind::InvalidData
        );
    }
}
