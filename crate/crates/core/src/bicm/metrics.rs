use crate::error::{param, Result};

/// Viterbi branch metrics `γ[k][s][i][b]` for every (time, stream, bit
/// position) slot, stored time-major in the same order the interleaver uses.
#[derive(Debug, Clone, PartialEq)]
pub struct BitMetricTable {
    symbols: usize,
    streams: usize,
    bits_per_symbol: usize,
    values: Vec<[f64; 2]>,
}

impl BitMetricTable {
    pub fn new(symbols: usize, streams: usize, bits_per_symbol: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != symbols * streams * bits_per_symbol {
            return param(format!(
                "{} metric pairs for {symbols}x{streams}x{bits_per_symbol} slots",
                values.len()
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return param("bit metrics must be finite and non-negative");
        }
        Ok(BitMetricTable {
            symbols,
            streams,
            bits_per_symbol,
            values,
        })
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn slot(&self, k: usize, s: usize, i: usize) -> usize {
        (k * self.streams + s) * self.bits_per_symbol + i
    }

    pub fn get(&self, k: usize, s: usize, i: usize, b: u8) -> f64 {
        self.values[self.slot(k, s, i)][b as usize]
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    /// Multiplies every entry of stream `s` by `factors[s]`.
    pub fn scale_streams(&self, factors: &[f64]) -> BitMetricTable {
        let mut out = self.clone();
        for (idx, v) in out.values.iter_mut().enumerate() {
            let s = (idx / self.bits_per_symbol) % self.streams;
            v[0] *= factors[s];
            v[1] *= factors[s];
        }
        out
    }
}
