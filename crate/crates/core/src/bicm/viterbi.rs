//! Soft-input Viterbi decoding of terminated blocks.

use super::code::{CodeSpec, STANDARD};
use super::interleaver::InterleaverMap;
use super::metrics::BitMetricTable;
use crate::error::{param, Result};

/// Decodes per-coded-bit metric pairs `[γ(b=0), γ(b=1)]` in code order.
///
/// Returns the information bits of the terminated codeword with the smallest
/// total metric. On equal path metrics the predecessor with the lower state
/// index survives.
pub fn decode_ordered(code: &CodeSpec, metrics: &[[f64; 2]]) -> Result<Vec<u8>> {
    let memory = code.memory as usize;
    if metrics.len() % 2 != 0 || metrics.len() < 2 * memory {
        return param(format!(
            "{} metric pairs cannot hold a terminated rate-1/2 block",
            metrics.len()
        ));
    }
    let steps = metrics.len() / 2;
    let states = code.num_states();
    let half = states / 2;

    // branch outputs for (state, input), packed as 2 bits
    let mut out_bits = vec![[0u8; 2]; states];
    for (s, slot) in out_bits.iter_mut().enumerate() {
        for u in 0..2u8 {
            let [a, b] = code.output(s, u);
            slot[u as usize] = (a << 1) | b;
        }
    }

    let mut cost = vec![f64::INFINITY; states];
    cost[0] = 0.0;
    let mut next = vec![0.0; states];
    // decisions[t * states + ns] = 1 when the odd predecessor won
    let mut decisions = vec![0u8; steps * states];

    for t in 0..steps {
        let m0 = metrics[2 * t];
        let m1 = metrics[2 * t + 1];
        let branch = [
            m0[0] + m1[0], // 00
            m0[0] + m1[1], // 01
            m0[1] + m1[0], // 10
            m0[1] + m1[1], // 11
        ];
        let row = &mut decisions[t * states..(t + 1) * states];
        for ns in 0..states {
            let u = ns / half;
            let even = (ns % half) << 1;
            let odd = even | 1;
            let ce = cost[even] + branch[out_bits[even][u] as usize];
            let co = cost[odd] + branch[out_bits[odd][u] as usize];
            if co < ce {
                next[ns] = co;
                row[ns] = 1;
            } else {
                next[ns] = ce;
                row[ns] = 0;
            }
        }
        std::mem::swap(&mut cost, &mut next);
    }

    let mut inputs = vec![0u8; steps];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        inputs[t] = (state / half) as u8;
        state = ((state % half) << 1) | decisions[t * states + state] as usize;
    }
    inputs.truncate(steps - memory);
    Ok(inputs)
}

/// Deinterleaves a metric table and decodes `info_len` bits with the
/// (133,171) code. Padding slots beyond the coded length are ignored.
pub fn viterbi_decode(metrics: &BitMetricTable, map: &InterleaverMap, info_len: usize) -> Result<Vec<u8>> {
    if metrics.values().len() != map.block_bits()
        || metrics.streams() != map.streams()
        || metrics.bits_per_symbol() != map.bits_per_symbol()
    {
        return param("metric table does not match the interleaver block");
    }
    let coded_len = STANDARD.coded_len(info_len);
    if coded_len > map.block_bits() {
        return param(format!(
            "{info_len} information bits do not fit a {}-bit block",
            map.block_bits()
        ));
    }
    let ordered = map.deinterleave(metrics.values())?;
    decode_ordered(&STANDARD, &ordered[..coded_len])
}
