use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::bicm::code::STANDARD;
use crate::bicm::qam::{Qam16, BITS_PER_SYMBOL};
use crate::bicm::{viterbi_decode, InterleaverMap};
use crate::codebook::Codebook;
use crate::error::{param, Error, Result};
use crate::linalg::{svd_ordered, ComplexMatrix, PhaseVector, SvdTriple};
use crate::quantizer::{optimal_phases, select, Criterion};
use crate::random::gaussian_matrix;
use crate::receivers::{
    bit_metrics, mmse_equalize, perfect_csit_equalize, svd_receiver_equalize, svd_receiver_params, zf_equalize,
};
use crate::trainer::random_codebook;

use super::config::{CodebookSource, ReceiverKind, Selection, SimConfig};
use super::report::BerPoint;
use super::rng::{block_rng, Purpose};

/// Redraws allowed for one block before a rank failure is reported.
pub const MAX_ATTEMPTS: u32 = 64;
/// Blocks simulated per parallel batch. Fixed so that results do not depend
/// on the worker count.
pub const BATCH: u64 = 64;

/// Random inputs of one block.
#[derive(Debug, Clone)]
pub struct BlockDraw {
    pub info: Vec<u8>,
    /// `M × N`, i.i.d. CN(0, 1).
    pub h: ComplexMatrix,
    /// `M × K`, i.i.d. CN(0, 1) before scaling by `√N0`.
    pub noise: ComplexMatrix,
}

/// Transmitter state for one channel realization.
#[derive(Debug, Clone)]
pub struct Precoding {
    /// Channel SVD truncated to the stream count.
    pub svd: SvdTriple,
    pub v_l: ComplexMatrix,
    /// Phases aligning `V_L` to `V̄` column by column.
    pub phases: PhaseVector,
    pub index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockResult {
    pub info: Vec<u8>,
    pub decoded: Vec<u8>,
    /// Draws rejected for rank deficiency before this one.
    pub discarded: u32,
}

impl BlockResult {
    pub fn bit_errors(&self) -> u64 {
        self.info.iter().zip(&self.decoded).filter(|(a, b)| a != b).count() as u64
    }
}

/// A validated configuration with its codebook resolved.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    codebook: Option<Codebook>,
    rotation: Option<ComplexMatrix>,
    map: InterleaverMap,
    qam: Qam16,
}

impl Simulation {
    /// Validates `cfg` and loads or generates its codebook.
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let cb = match &cfg.codebook {
            CodebookSource::None => None,
            CodebookSource::File { path } => Some(Codebook::load(path)?),
            CodebookSource::Random { bits, seed } => Some(random_codebook(cfg.n_tx, cfg.streams, *bits, *seed)?),
        };
        Self::build(cfg, cb)
    }

    /// Uses an in-memory codebook instead of `cfg.codebook`.
    pub fn with_codebook(cfg: SimConfig, codebook: Option<Codebook>) -> Result<Self> {
        let mut check = cfg.clone();
        if codebook.is_some() && check.codebook == CodebookSource::None {
            check.codebook = CodebookSource::Random { bits: 1, seed: 0 };
        }
        check.validate()?;
        if check.selection.criterion().is_some() && codebook.is_none() {
            return param("selection needs a codebook");
        }
        Self::build(cfg, codebook)
    }

    fn build(cfg: SimConfig, codebook: Option<Codebook>) -> Result<Self> {
        if let Some(cb) = &codebook {
            if (cb.n_tx(), cb.n_streams()) != (cfg.n_tx, cfg.streams) {
                return param(format!(
                    "codebook is {}x{} but the link needs {}x{}",
                    cb.n_tx(),
                    cb.n_streams(),
                    cfg.n_tx,
                    cfg.streams
                ));
            }
        }
        let coded = STANDARD.coded_len(cfg.info_bits_per_block);
        let map = InterleaverMap::for_coded_len(coded, cfg.streams, BITS_PER_SYMBOL, cfg.interleaver_depth)?;
        Ok(Simulation {
            rotation: cfg.rotation_matrix(),
            cfg,
            codebook,
            map,
            qam: Qam16::new(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn codebook(&self) -> Option<&Codebook> {
        self.codebook.as_ref()
    }

    pub fn interleaver(&self) -> &InterleaverMap {
        &self.map
    }

    /// `N0 = N / SNR`, so the received SNR per antenna equals `SNR` when
    /// every transmit antenna carries unit power.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.cfg.n_tx as f64 / 10f64.powf(snr_db / 10.0)
    }

    pub fn draw(&self, snr_index: usize, block: u64, attempt: u32) -> BlockDraw {
        let seed = self.cfg.master_seed;
        let mut rng = block_rng(seed, snr_index, block, attempt, Purpose::Data);
        let info = (0..self.cfg.info_bits_per_block).map(|_| rng.random::<bool>() as u8).collect();
        let h = gaussian_matrix(
            &mut block_rng(seed, snr_index, block, attempt, Purpose::Channel),
            self.cfg.n_rx,
            self.cfg.n_tx,
        );
        let noise = gaussian_matrix(
            &mut block_rng(seed, snr_index, block, attempt, Purpose::Noise),
            self.cfg.n_rx,
            self.map.symbols(),
        );
        BlockDraw { info, h, noise }
    }

    pub fn precode(&self, h: &ComplexMatrix) -> Result<Precoding> {
        let svd = svd_ordered(h)?.truncate(self.cfg.streams)?;
        let (v_l, phases, index) = match self.cfg.selection {
            Selection::Perfect => (svd.v.clone(), PhaseVector::zeros(self.cfg.streams), None),
            Selection::FixedRotation => {
                let q = self.rotation.as_ref().expect("validated");
                let v_l = &svd.v * q;
                let phases = optimal_phases(&svd.v, &v_l)?;
                (v_l, phases, None)
            }
            sel => {
                let criterion = sel.criterion().expect("codebook selection");
                let cb = self.codebook.as_ref().expect("validated");
                let choice = select(criterion, h, &svd.v, cb)?;
                let v_l = cb.entries()[choice.index].clone();
                let phases = if criterion == Criterion::ScOe {
                    choice.phases
                } else {
                    optimal_phases(&svd.v, &v_l)?
                };
                (v_l, phases, Some(choice.index))
            }
        };
        Ok(Precoding { svd, v_l, phases, index })
    }

    /// `S × K` symbol matrix for one block of information bits.
    pub fn modulate(&self, info: &[u8]) -> Result<ComplexMatrix> {
        let slots = self.map.interleave(&STANDARD.encode(info))?;
        let s = self.cfg.streams;
        let k = self.map.symbols();
        let mut x = ComplexMatrix::zeros(s, k);
        for (idx, bits) in slots.chunks_exact(BITS_PER_SYMBOL).enumerate() {
            x[(idx % s, idx / s)] = self.qam.map(bits);
        }
        Ok(x)
    }

    /// Noiseless received block `H V_L X`.
    pub fn transmit(&self, h: &ComplexMatrix, pre: &Precoding, x: &ComplexMatrix) -> ComplexMatrix {
        h * (&pre.v_l * x)
    }

    /// Transmits, equalizes and decodes one draw. Rank-deficient draws come
    /// back as [`Error::Rank`].
    pub fn process(&self, draw: &BlockDraw, snr_db: f64) -> Result<Vec<u8>> {
        let n0 = self.noise_variance(snr_db);
        let pre = self.precode(&draw.h)?;
        let x = self.modulate(&draw.info)?;
        let y = self.transmit(&draw.h, &pre, &x) + &draw.noise * Complex64::new(n0.sqrt(), 0.0);
        let eq = match self.cfg.receiver {
            ReceiverKind::Zf => zf_equalize(&draw.h, &pre.v_l, &y)?,
            ReceiverKind::Mmse => mmse_equalize(&draw.h, &pre.v_l, n0, &y)?,
            ReceiverKind::Svd => {
                let params = svd_receiver_params(&pre.svd, &pre.v_l, &pre.phases, n0)?;
                svd_receiver_equalize(&pre.svd, &pre.phases, params, &y)?
            }
            ReceiverKind::Perfect => perfect_csit_equalize(&pre.svd, &y)?,
        };
        let table = bit_metrics(&eq, &self.qam)?;
        viterbi_decode(&table, &self.map, self.cfg.info_bits_per_block)
    }

    /// Runs block `block` at grid point `snr_index`, redrawing on rank failure.
    pub fn run_block(&self, snr_index: usize, block: u64) -> Result<BlockResult> {
        let snr_db = *self
            .cfg
            .snr_db
            .get(snr_index)
            .ok_or_else(|| Error::Parameter(format!("no SNR point {snr_index}")))?;
        let mut last = None;
        for attempt in 0..MAX_ATTEMPTS {
            let draw = self.draw(snr_index, block, attempt);
            match self.process(&draw, snr_db) {
                Ok(decoded) => {
                    return Ok(BlockResult {
                        info: draw.info,
                        decoded,
                        discarded: attempt,
                    })
                }
                Err(Error::Rank(msg)) => last = Some(msg),
                Err(e) => return Err(e),
            }
        }
        Err(Error::Rank(format!(
            "block {block} rank-deficient after {MAX_ATTEMPTS} draws: {}",
            last.unwrap_or_default()
        )))
    }

    /// Simulates one SNR point until the stopping rule fires.
    pub fn run_point(&self, snr_index: usize) -> Result<BerPoint> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .map_err(|e| Error::Parameter(e.to_string()))?;
        pool.install(|| self.run_point_in_pool(snr_index))
    }

    fn run_point_in_pool(&self, snr_index: usize) -> Result<BerPoint> {
        let stop = self.cfg.stop;
        let per_block = self.cfg.info_bits_per_block as u64;
        let mut point = BerPoint::new(self.cfg.snr_db[snr_index]);
        let mut next = 0u64;
        loop {
            let budget = (stop.max_info_bits - point.info_bits).div_ceil(per_block);
            let count = BATCH.min(budget.max(1));
            let results: Vec<Result<BlockResult>> = (next..next + count)
                .into_par_iter()
                .map(|b| self.run_block(snr_index, b))
                .collect();
            next += count;
            for r in results {
                let r = r?;
                point.add_block(per_block, r.bit_errors(), r.discarded as u64);
                if stop.done(point.block_errors, point.bit_errors, point.info_bits) {
                    point.finish();
                    return Ok(point);
                }
            }
        }
    }

    /// Simulates the whole SNR grid.
    pub fn run(&self) -> Result<Vec<BerPoint>> {
        (0..self.cfg.snr_db.len()).map(|i| self.run_point(i)).collect()
    }

    /// Ratio of received signal energy to noise energy in dB, measured over
    /// `blocks` draws at `snr_db`.
    pub fn measure_receive_snr(&self, snr_db: f64, blocks: u64) -> Result<f64> {
        let n0 = self.noise_variance(snr_db);
        let (mut signal, mut noise) = (0.0, 0.0);
        let mut done = 0;
        let mut block = 0;
        while done < blocks {
            let draw = self.draw(0, block, 0);
            block += 1;
            let pre = match self.precode(&draw.h) {
                Ok(p) => p,
                Err(Error::Rank(_)) => continue,
                Err(e) => return Err(e),
            };
            let x = self.modulate(&draw.info)?;
            signal += self.transmit(&draw.h, &pre, &x).norm_squared();
            noise += n0 * draw.noise.norm_squared();
            done += 1;
        }
        Ok(10.0 * (signal / noise).log10())
    }
}
