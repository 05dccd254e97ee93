//! Spatial bit interleaver `k′ → (k, s, i)`.
//!
//! Coded bit `k′` goes to stream `k′ mod S`. Within a stream the bits are
//! spread by a row-column block interleaver over windows of `depth` symbols:
//! successive bits of a stream fill the window's symbols one after another,
//! first at bit position 0, then position 1, and so on. The last window may
//! be shorter.

use crate::error::{param, Result};

pub const DEFAULT_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterleaverMap {
    streams: usize,
    bits_per_symbol: usize,
    depth: usize,
    /// `slots[k′]` is the flat index `(k·S + s)·m + i`.
    slots: Vec<usize>,
}

impl InterleaverMap {
    pub fn new(block_bits: usize, streams: usize, bits_per_symbol: usize, depth: usize) -> Result<Self> {
        if streams == 0 || bits_per_symbol == 0 || depth == 0 {
            return param("streams, bits per symbol and depth must be positive");
        }
        let per_time = streams * bits_per_symbol;
        if block_bits == 0 || block_bits % per_time != 0 {
            return param(format!(
                "block of {block_bits} bits is not a positive multiple of {per_time}"
            ));
        }
        let symbols = block_bits / per_time;
        let window_bits = depth * bits_per_symbol;
        let slots = (0..block_bits)
            .map(|kp| {
                let s = kp % streams;
                let j = kp / streams;
                let window = j / window_bits;
                let t = j % window_bits;
                let width = depth.min(symbols - window * depth);
                let k = window * depth + t % width;
                let i = t / width;
                (k * streams + s) * bits_per_symbol + i
            })
            .collect();
        Ok(InterleaverMap {
            streams,
            bits_per_symbol,
            depth,
            slots,
        })
    }

    /// Smallest block that holds `coded_len` bits; the tail is zero padding.
    pub fn for_coded_len(coded_len: usize, streams: usize, bits_per_symbol: usize, depth: usize) -> Result<Self> {
        let per_time = (streams * bits_per_symbol).max(1);
        let block_bits = coded_len.div_ceil(per_time) * per_time;
        Self::new(block_bits, streams, bits_per_symbol, depth)
    }

    pub fn block_bits(&self) -> usize {
        self.slots.len()
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Symbol times per block.
    pub fn symbols(&self) -> usize {
        self.slots.len() / (self.streams * self.bits_per_symbol)
    }

    /// `(k, s, i)` for coded bit `kp`.
    pub fn position(&self, kp: usize) -> (usize, usize, usize) {
        let flat = self.slots[kp];
        let i = flat % self.bits_per_symbol;
        let ks = flat / self.bits_per_symbol;
        (ks / self.streams, ks % self.streams, i)
    }

    pub fn slot(&self, kp: usize) -> usize {
        self.slots[kp]
    }

    /// Reorders coded bits into time-major `(k, s, i)` order, zero-padding a
    /// short input.
    pub fn interleave<T: Copy + Default>(&self, coded: &[T]) -> Result<Vec<T>> {
        if coded.len() > self.block_bits() {
            return param(format!(
                "{} bits exceed the {}-bit block",
                coded.len(),
                self.block_bits()
            ));
        }
        let mut out = vec![T::default(); self.block_bits()];
        for (kp, &v) in coded.iter().enumerate() {
            out[self.slots[kp]] = v;
        }
        Ok(out)
    }

    /// Inverse of [`interleave`](Self::interleave) for a full block.
    pub fn deinterleave<T: Copy>(&self, values: &[T]) -> Result<Vec<T>> {
        if values.len() != self.block_bits() {
            return param(format!(
                "{} values for a {}-bit block",
                values.len(),
                self.block_bits()
            ));
        }
        Ok(self.slots.iter().map(|&slot| values[slot]).collect())
    }
}
