use std::f64::consts::FRAC_1_SQRT_2;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bicm::interleaver::DEFAULT_DEPTH;
use crate::error::{param, Result};
use crate::linalg::{orthonormality_defect, ComplexMatrix};
use crate::quantizer::Criterion;

/// How the transmitter picks its precoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    ScE,
    ScOe,
    LambdaMin,
    /// Unquantized `V̄`.
    Perfect,
    /// Unquantized `V̄ Q` for a fixed unitary `Q`.
    FixedRotation,
}

impl Selection {
    pub fn criterion(self) -> Option<Criterion> {
        match self {
            Selection::ScE => Some(Criterion::ScE),
            Selection::ScOe => Some(Criterion::ScOe),
            Selection::LambdaMin => Some(Criterion::LambdaMin),
            Selection::Perfect | Selection::FixedRotation => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Selection::ScE => "sc-e",
            Selection::ScOe => "sc-oe",
            Selection::LambdaMin => "lambda-min",
            Selection::Perfect => "perfect",
            Selection::FixedRotation => "fixed-rotation",
        }
    }
}

impl FromStr for Selection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "sc-e" => Selection::ScE,
            "sc-oe" => Selection::ScOe,
            "lambda-min" => Selection::LambdaMin,
            "perfect" => Selection::Perfect,
            "fixed-rotation" => Selection::FixedRotation,
            other => return Err(format!("unknown selection `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverKind {
    Zf,
    Mmse,
    Svd,
    /// `Ū^H` detection with perfect-CSIT metrics; only valid with perfect selection.
    Perfect,
}

impl ReceiverKind {
    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::Zf => "zf",
            ReceiverKind::Mmse => "mmse",
            ReceiverKind::Svd => "svd",
            ReceiverKind::Perfect => "perfect",
        }
    }
}

impl FromStr for ReceiverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "zf" => ReceiverKind::Zf,
            "mmse" => ReceiverKind::Mmse,
            "svd" => ReceiverKind::Svd,
            "perfect" => ReceiverKind::Perfect,
            other => return Err(format!("unknown receiver `{other}`")),
        })
    }
}

/// Where the feedback codebook comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodebookSource {
    None,
    File { path: PathBuf },
    /// Untrained codebook drawn with `random_codebook`.
    Random { bits: u32, seed: u64 },
}

/// Per-SNR stopping rule: simulate until both error targets are met or the
/// information-bit budget is spent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub min_block_errors: u64,
    pub min_bit_errors: u64,
    pub max_info_bits: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_block_errors: 200,
            min_bit_errors: 0,
            max_info_bits: 20_000_000,
        }
    }
}

impl StopRule {
    pub fn done(&self, block_errors: u64, bit_errors: u64, info_bits: u64) -> bool {
        info_bits >= self.max_info_bits
            || (block_errors >= self.min_block_errors && bit_errors >= self.min_bit_errors)
    }
}

/// Complete, serializable description of one BER sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub streams: usize,
    pub selection: Selection,
    pub receiver: ReceiverKind,
    pub codebook: CodebookSource,
    /// `S × S` unitary `Q` for fixed-rotation mode, row-major `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<[f64; 2]>>,
    pub snr_db: Vec<f64>,
    pub info_bits_per_block: usize,
    pub interleaver_depth: usize,
    pub stop: StopRule,
    pub master_seed: u64,
    pub workers: usize,
}

pub const DEFAULT_INFO_BITS: usize = 512;

impl SimConfig {
    /// Perfect-CSIT ZF defaults for an `n_rx × n_tx` channel.
    pub fn new(n_rx: usize, n_tx: usize, streams: usize) -> Self {
        SimConfig {
            n_tx,
            n_rx,
            streams,
            selection: Selection::Perfect,
            receiver: ReceiverKind::Zf,
            codebook: CodebookSource::None,
            rotation: None,
            snr_db: vec![0.0],
            info_bits_per_block: DEFAULT_INFO_BITS,
            interleaver_depth: DEFAULT_DEPTH,
            stop: StopRule::default(),
            master_seed: 1,
            workers: 1,
        }
    }

    /// Inclusive SNR grid `from, from + step, ...` up to `to`.
    pub fn snr_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
            return param(format!("invalid SNR grid {from}..{to} step {step}"));
        }
        let count = ((to - from) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| from + step * i as f64).collect())
    }

    pub fn rotation_matrix(&self) -> Option<ComplexMatrix> {
        let s = self.streams;
        self.rotation.as_ref().map(|r| {
            let data: Vec<Complex64> = r.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
            ComplexMatrix::from_row_slice(s, s, &data)
        })
    }

    /// Checks everything that does not need the codebook contents.
    pub fn validate(&self) -> Result<()> {
        let q = self.n_rx.min(self.n_tx);
        if self.streams == 0 || self.streams > q {
            return param(format!(
                "streams must be in 1..={q} for a {}x{} channel",
                self.n_rx, self.n_tx
            ));
        }
        if self.snr_db.is_empty() {
            return param("SNR grid is empty");
        }
        if self.snr_db.iter().any(|x| !x.is_finite()) || self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return param("SNR grid must be finite and strictly increasing");
        }
        if self.stop.max_info_bits == 0 || self.stop.min_block_errors == 0 {
            return param("stopping thresholds must be positive");
        }
        if self.info_bits_per_block == 0 || self.interleaver_depth == 0 {
            return param("block size and interleaver depth must be positive");
        }
        if self.workers == 0 {
            return param("need at least one worker");
        }
        if self.receiver == ReceiverKind::Perfect && self.selection != Selection::Perfect {
            return param("the perfect-CSIT receiver requires perfect selection");
        }
        match (self.selection.criterion(), &self.codebook) {
            (Some(_), CodebookSource::None) => {
                return param(format!("selection {} needs a codebook", self.selection.name()))
            }
            (None, CodebookSource::File { .. } | CodebookSource::Random { .. }) => {
                return param(format!("selection {} does not use a codebook", self.selection.name()))
            }
            _ => {}
        }
        match (self.selection, self.rotation_matrix()) {
            (Selection::FixedRotation, None) => return param("fixed-rotation mode needs a rotation matrix"),
            (Selection::FixedRotation, Some(q)) => {
                if self.rotation.as_ref().map(Vec::len) != Some(self.streams * self.streams) {
                    return param("rotation must be streams x streams");
                }
                if orthonormality_defect(&q) > 1e-9 {
                    return param("rotation matrix is not unitary");
                }
            }
            (_, Some(_)) => return param("a rotation is only used in fixed-rotation mode"),
            _ => {}
        }
        Ok(())
    }
}

/// Unitary `s × s` DFT matrix `F[j][k] = e^{−2πi jk/s} / √s`, row-major.
pub fn dft_rotation(s: usize) -> Vec<[f64; 2]> {
    if s == 2 {
        // exact entries for the common case
        let a = FRAC_1_SQRT_2;
        return vec![[a, 0.0], [a, 0.0], [a, 0.0], [-a, 0.0]];
    }
    let norm = 1.0 / (s as f64).sqrt();
    (0..s * s)
        .map(|idx| {
            let (j, k) = (idx / s, idx % s);
            let z = Complex64::from_polar(norm, -std::f64::consts::TAU * (j * k) as f64 / s as f64);
            [z.re, z.im]
        })
        .collect()
}
