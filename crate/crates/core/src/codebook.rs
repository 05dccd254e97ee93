//! Precoder codebooks and their versioned JSON file format.
//!
//! ```json
//! {"version":1,"n_tx":2,"n_streams":2,"bits":4,"entries":[[[re,im],...],...]}
//! ```
//!
//! Each entry lists its N×S codeword row-major as `[re, im]` pairs.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{orthonormality_defect, ComplexMatrix};

pub const FORMAT_VERSION: u32 = 1;
/// Orthonormality tolerance for codewords built in memory.
pub const CODEWORD_TOL: f64 = 1e-8;
/// Orthonormality tolerance for codewords read from disk.
pub const FILE_TOL: f64 = 1e-6;
/// Largest supported feedback size.
pub const MAX_BITS: u32 = 20;

/// `2^bits` matrices of shape `n_tx × n_streams` with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n_tx: usize,
    n_streams: usize,
    bits: u32,
    entries: Vec<ComplexMatrix>,
}

impl Codebook {
    pub fn new(n_tx: usize, n_streams: usize, bits: u32, entries: Vec<ComplexMatrix>) -> Result<Self> {
        Self::validated(n_tx, n_streams, bits, entries, CODEWORD_TOL)
    }

    fn validated(
        n_tx: usize,
        n_streams: usize,
        bits: u32,
        entries: Vec<ComplexMatrix>,
        tol: f64,
    ) -> Result<Self> {
        if n_streams == 0 || n_streams > n_tx {
            return param(format!("need 1 <= streams <= n_tx, got S={n_streams}, N={n_tx}"));
        }
        if bits == 0 || bits > MAX_BITS {
            return param(format!("feedback bits must be in 1..={MAX_BITS}, got {bits}"));
        }
        if entries.len() != 1usize << bits {
            return param(format!(
                "{} entries for a {bits}-bit codebook",
                entries.len()
            ));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.shape() != (n_tx, n_streams) {
                return param(format!(
                    "entry {i} has shape {:?}, expected ({n_tx}, {n_streams})",
                    e.shape()
                ));
            }
            let defect = orthonormality_defect(e);
            if !(defect <= tol) {
                return param(format!(
                    "entry {i} columns are not orthonormal (defect {defect:.3e})"
                ));
            }
        }
        Ok(Codebook {
            n_tx,
            n_streams,
            bits,
            entries,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_streams(&self) -> usize {
        self.n_streams
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ComplexMatrix] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<&ComplexMatrix> {
        self.entries.get(index)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CodebookFile {
            version: FORMAT_VERSION,
            n_tx: self.n_tx,
            n_streams: self.n_streams,
            bits: self.bits,
            entries: self
                .entries
                .iter()
                .map(|m| {
                    (0..m.nrows())
                        .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
                        .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
                        .collect()
                })
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CodebookFile = serde_json::from_str(text)?;
        if file.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", file.version)));
        }
        let per_entry = file.n_tx * file.n_streams;
        let mut entries = Vec::with_capacity(file.entries.len());
        for (i, raw) in file.entries.iter().enumerate() {
            if raw.len() != per_entry {
                return Err(Error::Format(format!(
                    "entry {i} has {} values, expected {per_entry}",
                    raw.len()
                )));
            }
            let data: Vec<Complex64> = raw.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
            entries.push(ComplexMatrix::from_row_slice(file.n_tx, file.n_streams, &data));
        }
        Self::validated(file.n_tx, file.n_streams, file.bits, entries, FILE_TOL)
            .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookFile {
    version: u32,
    n_tx: usize,
    n_streams: usize,
    bits: u32,
    entries: Vec<Vec<[f64; 2]>>,
}
