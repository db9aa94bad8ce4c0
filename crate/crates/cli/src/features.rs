//! Binary feature files.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 8    | magic `WSPFEAT\0`             |
//! | 8      | 4    | format version (u32, = 1)     |
//! | 12     | 8    | frame count (u64)             |
//! | 20     | 8    | dimension (u64)               |
//! | 28     | 8·n·d| row-major f64 values          |

use std::fs;
use std::path::Path;

use wavespoof_core::Matrix;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"WSPFEAT\0";
pub const VERSION: u32 = 1;
const HEADER: usize = 28;

pub fn encode(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 8 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Matrix, String> {
    if bytes.len() < HEADER || &bytes[..8] != MAGIC {
        return Err("not a feature file (bad magic)".into());
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(8);
    if version != VERSION {
        return Err(format!("unsupported feature file version {version}"));
    }
    let (rows, cols) = (u64_at(12) as usize, u64_at(20) as usize);
    let expected = rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).and_then(|n| n.checked_add(HEADER));
    if expected != Some(bytes.len()) {
        return Err(format!("size mismatch for {rows}×{cols} features"));
    }
    let data = bytes[HEADER..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Matrix::from_vec(rows, cols, data).map_err(|e| e.to_string())
}

pub fn write_features(path: &Path, m: &Matrix) -> CliResult<()> {
    fs::write(path, encode(m)).map_err(|e| CliError::file(path, e))
}

pub fn read_features(path: &Path) -> CliResult<Matrix> {
    let bytes = fs::read(path).map_err(|e| CliError::file(path, e))?;
    decode(&bytes).map_err(|e| CliError::file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = Matrix::from_vec(2, 3, vec![1.0, -0.0, f64::MIN_POSITIVE, 1e300, -7.25, 0.1]).unwrap();
        let back = decode(&encode(&m)).unwrap();
        assert_eq!(back.rows(), 2);
        assert!(back.as_slice().iter().zip(m.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn empty_matrix_round_trips() {
        let m = Matrix::zeros(0, 40);
        let back = decode(&encode(&m)).unwrap();
        assert_eq!((back.rows(), back.cols()), (0, 40));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let bytes = encode(&Matrix::zeros(2, 2));
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(b"nonsense").is_err());
    }
}
