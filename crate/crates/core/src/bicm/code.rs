//! Rate-1/2 feed-forward convolutional code.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Generator polynomials and memory of a rate-1/2 feed-forward code.
///
/// The shift register holds the current input at bit `memory` and the previous
/// inputs below it, most recent first, so octal generators read MSB-first as
/// taps from the current input backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeSpec {
    pub generators: [u32; 2],
    pub memory: u32,
}

/// The 64-state (133,171) code.
pub const STANDARD: CodeSpec = CodeSpec {
    generators: [0o133, 0o171],
    memory: 6,
};

impl Default for CodeSpec {
    fn default() -> Self {
        STANDARD
    }
}

impl CodeSpec {
    pub fn num_states(&self) -> usize {
        1 << self.memory
    }

    pub fn constraint_length(&self) -> u32 {
        self.memory + 1
    }

    /// Output pair for `input` leaving `state`.
    #[inline]
    pub fn output(&self, state: usize, input: u8) -> [u8; 2] {
        let reg = ((input as u32) << self.memory) | state as u32;
        [
            ((reg & self.generators[0]).count_ones() & 1) as u8,
            ((reg & self.generators[1]).count_ones() & 1) as u8,
        ]
    }

    #[inline]
    pub fn next_state(&self, state: usize, input: u8) -> usize {
        ((input as usize) << (self.memory - 1)) | (state >> 1)
    }

    /// Coded length of a terminated block of `info_len` bits.
    pub fn coded_len(&self, info_len: usize) -> usize {
        2 * (info_len + self.memory as usize)
    }

    /// Encodes `info` and appends `memory` zero tail bits; outputs are
    /// interleaved generator-first (`g0, g1, g0, g1, ...`).
    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.coded_len(info.len()));
        let mut state = 0;
        let tail = std::iter::repeat(0u8).take(self.memory as usize);
        for bit in info.iter().map(|&b| b & 1).chain(tail) {
            out.extend_from_slice(&self.output(state, bit));
            state = self.next_state(state, bit);
        }
        out
    }

    /// Minimum output weight over paths leaving the zero state and returning
    /// to it, by shortest-path search over the trellis.
    pub fn free_distance(&self) -> usize {
        let states = self.num_states();
        let weight = |s: usize, u: u8| self.output(s, u).iter().map(|&b| b as usize).sum::<usize>();
        let mut dist = vec![usize::MAX; states];
        let mut heap = BinaryHeap::new();
        let first = self.next_state(0, 1);
        dist[first] = weight(0, 1);
        heap.push(Reverse((dist[first], first)));
        let mut best = usize::MAX;
        while let Some(Reverse((d, s))) = heap.pop() {
            if d > dist[s] || d >= best {
                continue;
            }
            for u in 0..2u8 {
                let ns = self.next_state(s, u);
                let nd = d + weight(s, u);
                if ns == 0 {
                    best = best.min(nd);
                } else if nd < dist[ns] {
                    dist[ns] = nd;
                    heap.push(Reverse((nd, ns)));
                }
            }
        }
        best
    }
}

/// Encodes with the (133,171) code, including the 6-bit zero tail.
pub fn conv_encode(info: &[u8]) -> Vec<u8> {
    STANDARD.encode(info)
}
