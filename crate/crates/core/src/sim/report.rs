use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counters and rates for one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub info_bits: u64,
    pub bit_errors: u64,
    pub blocks: u64,
    pub block_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub discarded_blocks: u64,
}

impl BerPoint {
    pub fn new(snr_db: f64) -> Self {
        BerPoint {
            snr_db,
            info_bits: 0,
            bit_errors: 0,
            blocks: 0,
            block_errors: 0,
            ber: 0.0,
            fer: 0.0,
            discarded_blocks: 0,
        }
    }

    pub fn add_block(&mut self, info_bits: u64, bit_errors: u64, discarded: u64) {
        self.info_bits += info_bits;
        self.bit_errors += bit_errors;
        self.blocks += 1;
        self.block_errors += (bit_errors > 0) as u64;
        self.discarded_blocks += discarded;
    }

    pub fn finish(&mut self) {
        if self.blocks > 0 {
            self.ber = self.bit_errors as f64 / self.info_bits as f64;
            self.fer = self.block_errors as f64 / self.blocks as f64;
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Writes `snr_db,info_bits,bit_errors,blocks,block_errors,ber,fer,discarded_blocks`.
pub fn write_csv<W: Write>(points: &[BerPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<BerPoint>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

/// SNR at which the curve crosses `target`, by linear interpolation of
/// `log10(BER)` between neighbouring points with nonzero BER. `None` when the
/// curve never crosses.
pub fn snr_at_ber(points: &[BerPoint], target: f64) -> Option<f64> {
    let lt = target.log10();
    let usable: Vec<&BerPoint> = points.iter().filter(|p| p.ber > 0.0).collect();
    for w in usable.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.ber == target {
            return Some(a.snr_db);
        }
        if a.ber > target && b.ber <= target {
            let (la, lb) = (a.ber.log10(), b.ber.log10());
            return Some(a.snr_db + (lt - la) / (lb - la) * (b.snr_db - a.snr_db));
        }
    }
    usable.last().filter(|p| p.ber == target).map(|p| p.snr_db)
}
