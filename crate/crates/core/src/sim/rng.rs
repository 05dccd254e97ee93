//! Counter-based seeding. Every random draw of a block comes from its own
//! ChaCha stream keyed by `(master seed, SNR index, block index, attempt,
//! purpose)`, so results do not depend on scheduling and configurations that
//! share a master seed see the same channels, data and noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Data = 1,
    Channel = 2,
    Noise = 3,
}

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn block_seed(master: u64, snr_index: usize, block: u64, attempt: u32, purpose: Purpose) -> u64 {
    [snr_index as u64, block, attempt as u64, purpose as u64]
        .into_iter()
        .fold(mix64(master), |h, x| mix64(h ^ x))
}

pub fn block_rng(master: u64, snr_index: usize, block: u64, attempt: u32, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(block_seed(master, snr_index, block, attempt, purpose))
}
