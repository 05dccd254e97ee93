//! Gray-labelled 16-QAM.
//!
//! Label bits `b0 b1 b2 b3`: `b0 b1` select the in-phase level and `b2 b3` the
//! quadrature level, each through the Gray sequence 00, 01, 11, 10 mapped to
//! −3, −1, +1, +3 (scaled by 1/√10 for unit average energy).

use num_complex::Complex64;

pub const BITS_PER_SYMBOL: usize = 4;
pub const POINTS: usize = 16;

/// Gray pair → amplitude level index 0..4 (−3, −1, +1, +3).
const PAIR_TO_LEVEL: [usize; 4] = [0, 1, 3, 2];

#[derive(Debug, Clone)]
pub struct Qam16 {
    points: [Complex64; POINTS],
    /// `subsets[i][b]` lists the labels whose bit `i` equals `b`.
    subsets: [[[usize; POINTS / 2]; 2]; BITS_PER_SYMBOL],
}

impl Default for Qam16 {
    fn default() -> Self {
        Self::new()
    }
}

impl Qam16 {
    pub fn new() -> Self {
        let scale = 1.0 / 10f64.sqrt();
        let amp = |pair: usize| (2.0 * PAIR_TO_LEVEL[pair] as f64 - 3.0) * scale;
        let mut points = [Complex64::new(0.0, 0.0); POINTS];
        for (label, p) in points.iter_mut().enumerate() {
            *p = Complex64::new(amp(label >> 2), amp(label & 3));
        }
        let mut subsets = [[[0; POINTS / 2]; 2]; BITS_PER_SYMBOL];
        for (i, per_bit) in subsets.iter_mut().enumerate() {
            let mut fill = [0usize; 2];
            for label in 0..POINTS {
                let b = label_bit(label, i);
                per_bit[b][fill[b]] = label;
                fill[b] += 1;
            }
        }
        Qam16 { points, subsets }
    }

    pub fn points(&self) -> &[Complex64; POINTS] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Labels of χ_b^i.
    pub fn subset(&self, i: usize, b: u8) -> &[usize; POINTS / 2] {
        &self.subsets[i][b as usize]
    }

    /// Symbol for four label bits, `bits[0]` first.
    pub fn map(&self, bits: &[u8]) -> Complex64 {
        debug_assert_eq!(bits.len(), BITS_PER_SYMBOL);
        let label = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        self.points[label]
    }

    /// Maps a bit sequence to consecutive symbols.
    pub fn map_all(&self, bits: &[u8]) -> Vec<Complex64> {
        bits.chunks_exact(BITS_PER_SYMBOL).map(|c| self.map(c)).collect()
    }

    /// Per-(bit, value) minima of a distance table indexed by label.
    #[inline]
    pub fn subset_minima(&self, dist: &[f64; POINTS]) -> [[f64; 2]; BITS_PER_SYMBOL] {
        let mut out = [[f64::INFINITY; 2]; BITS_PER_SYMBOL];
        for (label, &d) in dist.iter().enumerate() {
            for (i, slot) in out.iter_mut().enumerate() {
                let b = label_bit(label, i);
                if d < slot[b] {
                    slot[b] = d;
                }
            }
        }
        out
    }
}

/// Bit `i` (0 = first/most significant) of a 4-bit label.
#[inline]
pub fn label_bit(label: usize, i: usize) -> usize {
    (label >> (BITS_PER_SYMBOL - 1 - i)) & 1
}
