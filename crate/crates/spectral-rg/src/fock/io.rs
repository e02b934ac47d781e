//! Binary matrix container and eigenvalue CSV.
//!
//! Matrix layout: `rows: u64`, `cols: u64`, then `rows * cols` pairs of
//! little-endian `f64` (real, imaginary) in row-major order.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64 as c64;

use crate::error::{Result, SrgError};
use crate::linalg::{CMatrix, CVector};

pub fn matrix_to_bytes(m: &CMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 16 * m.len());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for z in m.iter() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn matrix_from_bytes(bytes: &[u8]) -> Result<CMatrix> {
    let word = |i: usize| -> Result<[u8; 8]> {
        bytes
            .get(8 * i..8 * i + 8)
            .map(|s| s.try_into().unwrap())
            .ok_or_else(|| SrgError::Parse("matrix container is truncated".into()))
    };
    let rows = u64::from_le_bytes(word(0)?) as usize;
    let cols = u64::from_le_bytes(word(1)?) as usize;
    let n = rows.checked_mul(cols).ok_or_else(|| SrgError::Parse("matrix dims overflow".into()))?;
    if bytes.len() != 16 + 16 * n {
        return Err(SrgError::Parse(format!(
            "matrix container holds {} bytes, expected {}",
            bytes.len(),
            16 + 16 * n
        )));
    }
    let data = (0..n)
        .map(|k| {
            let re = f64::from_le_bytes(word(2 + 2 * k)?);
            let im = f64::from_le_bytes(word(3 + 2 * k)?);
            Ok(c64::new(re, im))
        })
        .collect::<Result<Vec<_>>>()?;
    CMatrix::from_shape_vec((rows, cols), data).map_err(|e| SrgError::Parse(e.to_string()))
}

pub fn write_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    std::fs::File::create(path)?.write_all(&matrix_to_bytes(m))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    matrix_from_bytes(&buf)
}

/// Stores a vector as a single-column matrix.
pub fn write_vector(path: &Path, v: &CVector) -> Result<()> {
    let m = v.clone().into_shape_with_order((v.len(), 1)).unwrap();
    write_matrix(path, &m)
}

pub fn eigenvalues_csv(values: &[c64]) -> String {
    let mut s = String::from("re,im\n");
    for z in values {
        writeln!(s, "{:.17e},{:.17e}", z.re, z.im).unwrap();
    }
    s
}

pub fn write_eigenvalues(path: &Path, values: &[c64]) -> Result<()> {
    std::fs::write(path, eigenvalues_csv(values))?;
    Ok(())
}

pub fn parse_eigenvalues(text: &str) -> Result<Vec<c64>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("re,im") {
        return Err(SrgError::Parse("eigenvalue CSV must start with `re,im`".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (a, b) = l.split_once(',').ok_or_else(|| SrgError::Parse(format!("bad row `{l}`")))?;
            let p = |s: &str| s.trim().parse::<f64>().map_err(|_| SrgError::Parse(format!("bad number `{s}`")));
            Ok(c64::new(p(a)?, p(b)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let m = CMatrix::from_shape_fn((3, 2), |(i, j)| c64::new(i as f64 / 3.0, -(j as f64) * 1e-300));
        assert_eq!(matrix_from_bytes(&matrix_to_bytes(&m)).unwrap(), m);
        let b = matrix_to_bytes(&m);
        assert!(matrix_from_bytes(&b[..b.len() - 1]).is_err());
    }

    #[test]
    fn eigenvalue_csv_round_trip() {
        let v = vec![c64::new(-6.1e-5, 0.0), c64::new(0.1, 1.0 / 3.0)];
        assert_eq!(parse_eigenvalues(&eigenvalues_csv(&v)).unwrap(), v);
    }
}
