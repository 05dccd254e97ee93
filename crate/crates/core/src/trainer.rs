//! Generalized Lloyd training of SC-OE codebooks.
//!
//! Each iteration partitions the training matrices by nearest codeword under
//! the SC-OE distortion, then replaces every codeword by an approximate
//! centroid: per column, the principal eigenvector of the region's conditional
//! correlation matrix, with the assembled matrix projected back onto matrices
//! with orthonormal columns.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::codebook::{Codebook, MAX_BITS};
use crate::error::{param, Error, Result};
use crate::linalg::{closest_unitary, principal_eigenvector, svd_ordered, ComplexMatrix};
use crate::quantizer::{nearest_sc_oe, sc_oe_unchecked};
use crate::random::{gaussian_matrix, random_orthonormal};

/// Minimum training items per codeword.
pub const MIN_ITEMS_PER_CODEWORD: usize = 10;
pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TRAIN_SIZE: usize = 10_000;
/// Average distortion at or below this is treated as exact quantization.
pub const ZERO_DISTORTION: f64 = 1e-12;

/// Codebook of `2^bits` projected Gaussian matrices.
pub fn random_codebook(n_tx: usize, n_streams: usize, bits: u32, seed: u64) -> Result<Codebook> {
    if n_streams == 0 || n_streams > n_tx {
        return param(format!("need 1 <= streams <= n_tx, got S={n_streams}, N={n_tx}"));
    }
    if bits == 0 || bits > MAX_BITS {
        return param(format!("feedback bits must be in 1..={MAX_BITS}, got {bits}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..1usize << bits)
        .map(|_| random_orthonormal(&mut rng, n_tx, n_streams))
        .collect();
    Codebook::new(n_tx, n_streams, bits, entries)
}

/// Truncated right singular matrices of i.i.d. Rayleigh channels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub items: Vec<ComplexMatrix>,
    pub source_seed: u64,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.items.first().map(|m| m.shape())
    }
}

pub fn training_set(count: usize, n_rx: usize, n_tx: usize, n_streams: usize, seed: u64) -> Result<TrainingSet> {
    if count == 0 {
        return param("training set needs at least one item");
    }
    if n_rx == 0 || n_tx == 0 || n_streams == 0 || n_streams > n_rx.min(n_tx) {
        return param(format!(
            "invalid dimensions M={n_rx}, N={n_tx}, S={n_streams}"
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(count);
    for _ in 0..count {
        let h = gaussian_matrix(&mut rng, n_rx, n_tx);
        items.push(svd_ordered(&h)?.truncate(n_streams)?.v);
    }
    Ok(TrainingSet {
        items,
        source_seed: seed,
    })
}

fn check_items(items: &[ComplexMatrix], cb: &Codebook) -> Result<()> {
    let want = (cb.n_tx(), cb.n_streams());
    match items.iter().position(|m| m.shape() != want) {
        Some(i) => param(format!(
            "item {i} has shape {:?}, codebook expects {want:?}",
            items[i].shape()
        )),
        None => Ok(()),
    }
}

/// Nearest codeword index and distortion for every item.
fn assign(items: &[ComplexMatrix], entries: &[ComplexMatrix]) -> Vec<(usize, f64)> {
    items.par_iter().map(|v| nearest_sc_oe(v, entries)).collect()
}

fn regions_from(assignment: &[(usize, f64)], count: usize) -> Vec<Vec<usize>> {
    let mut regions = vec![Vec::new(); count];
    for (n, &(k, _)) in assignment.iter().enumerate() {
        regions[k].push(n);
    }
    regions
}

/// Item indices falling in each SC-OE quantization region.
pub fn partition(items: &[ComplexMatrix], cb: &Codebook) -> Result<Vec<Vec<usize>>> {
    check_items(items, cb)?;
    Ok(regions_from(&assign(items, cb.entries()), cb.len()))
}

/// `(1/|R|) Σ v_s v_s^H` over the region's items.
pub fn conditional_correlation(region: &[&ComplexMatrix], column: usize) -> Result<ComplexMatrix> {
    let first = region.first().ok_or(Error::EmptyRegion(0))?;
    let n = first.nrows();
    if column >= first.ncols() {
        return param(format!("column {column} out of range"));
    }
    let one = num_complex::Complex64::new(1.0, 0.0);
    let mut r = ComplexMatrix::zeros(n, n);
    for item in region {
        if item.nrows() != n || column >= item.ncols() {
            return param("region items have inconsistent shapes");
        }
        let v = item.column(column);
        r.gerc(one, &v, &v, one);
    }
    Ok(r.unscale(region.len() as f64))
}

/// Approximate SC-OE centroid of a region.
pub fn centroid(region: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let first = region.first().ok_or(Error::EmptyRegion(0))?;
    let (n, s) = first.shape();
    let mut e = ComplexMatrix::zeros(n, s);
    for col in 0..s {
        let r = conditional_correlation(region, col)?;
        e.set_column(col, &principal_eigenvector(&r)?);
    }
    closest_unitary(&e)
}

/// Mean SC-OE distortion of the items against their nearest codewords,
/// summed in item order.
pub fn average_distortion(cb: &Codebook, items: &[ComplexMatrix]) -> Result<f64> {
    if items.is_empty() {
        return param("average distortion of an empty set");
    }
    check_items(items, cb)?;
    Ok(mean_distortion(&assign(items, cb.entries())))
}

fn mean_distortion(assignment: &[(usize, f64)]) -> f64 {
    assignment.iter().map(|&(_, d)| d).sum::<f64>() / assignment.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LloydConfig {
    pub bits: u32,
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl LloydConfig {
    pub fn new(bits: u32, seed: u64) -> Self {
        LloydConfig {
            bits,
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LloydReport {
    /// `J_0` (initial codebook) followed by one value per iteration.
    pub distortion_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub epsilon: f64,
    /// Regions reseeded because they emptied.
    pub empty_region_repairs: usize,
    /// Centroid updates rejected because they would raise a region's distortion.
    pub rejected_centroids: usize,
}

/// Runs the Lloyd iteration from a random initial codebook seeded by `cfg.seed`.
pub fn lloyd_train(ts: &TrainingSet, cfg: &LloydConfig) -> Result<(Codebook, LloydReport)> {
    let (n, s) = ts.shape().ok_or_else(|| Error::Parameter("empty training set".into()))?;
    let initial = random_codebook(n, s, cfg.bits, cfg.seed)?;
    lloyd_train_from(ts, initial, cfg)
}

/// Runs the Lloyd iteration from a given initial codebook.
pub fn lloyd_train_from(ts: &TrainingSet, initial: Codebook, cfg: &LloydConfig) -> Result<(Codebook, LloydReport)> {
    if !(cfg.epsilon > 0.0) {
        return param("epsilon must be positive");
    }
    if cfg.max_iter == 0 {
        return param("max_iter must be at least 1");
    }
    if initial.bits() != cfg.bits {
        return param("initial codebook size does not match the requested bits");
    }
    let size = initial.len();
    if ts.len() < size * MIN_ITEMS_PER_CODEWORD {
        return param(format!(
            "{} training items for {size} codewords; need at least {}",
            ts.len(),
            size * MIN_ITEMS_PER_CODEWORD
        ));
    }
    check_items(&ts.items, &initial)?;
    let (n_tx, n_streams, bits) = (initial.n_tx(), initial.n_streams(), initial.bits());
    let items = &ts.items;

    let mut entries = initial.entries().to_vec();
    let mut assignment = assign(items, &entries);
    let mut j_prev = mean_distortion(&assignment);
    let mut report = LloydReport {
        distortion_history: vec![j_prev],
        iterations: 0,
        converged: false,
        epsilon: cfg.epsilon,
        empty_region_repairs: 0,
        rejected_centroids: 0,
    };

    for iter in 1..=cfg.max_iter {
        let regions = regions_from(&assignment, size);
        if regions.iter().all(|r| r.is_empty()) {
            return Err(Error::Degenerate("every region is empty".into()));
        }

        let updates: Vec<Option<ComplexMatrix>> = regions
            .par_iter()
            .map(|region| {
                if region.is_empty() {
                    return None;
                }
                let members: Vec<&ComplexMatrix> = region.iter().map(|&i| &items[i]).collect();
                let c = centroid(&members).ok()?;
                let old: f64 = region.iter().map(|&i| assignment[i].1).sum();
                let new: f64 = members.iter().map(|v| sc_oe_unchecked(v, &c)).sum();
                (new <= old).then_some(c)
            })
            .collect();

        let mut next = entries.clone();
        for (k, update) in updates.into_iter().enumerate() {
            match update {
                Some(c) => next[k] = c,
                None if !regions[k].is_empty() => report.rejected_centroids += 1,
                None => {}
            }
        }

        let empty: Vec<usize> = (0..size).filter(|&k| regions[k].is_empty()).collect();
        if !empty.is_empty() {
            // farthest-first reseeding against the updated codewords
            let mut worst: Vec<f64> = items
                .par_iter()
                .zip(assignment.par_iter())
                .map(|(v, &(k, _))| sc_oe_unchecked(v, &next[k]))
                .collect();
            for &k in &empty {
                let mut pick = 0;
                for (i, &d) in worst.iter().enumerate() {
                    if d > worst[pick] {
                        pick = i;
                    }
                }
                next[k] = items[pick].clone();
                let seed = &next[k];
                worst
                    .par_iter_mut()
                    .zip(items.par_iter())
                    .for_each(|(d, v)| *d = d.min(sc_oe_unchecked(v, seed)));
                report.empty_region_repairs += 1;
            }
        }

        let next_assignment = assign(items, &next);
        let j = mean_distortion(&next_assignment);
        report.iterations = iter;
        if j > j_prev {
            // rounding-level increase: keep the previous codebook and stop
            report.distortion_history.push(j_prev);
            report.converged = true;
            break;
        }
        entries = next;
        assignment = next_assignment;
        report.distortion_history.push(j);
        let improvement = if j_prev > 0.0 { (j_prev - j) / j_prev } else { 0.0 };
        j_prev = j;
        if improvement <= cfg.epsilon || j <= ZERO_DISTORTION {
            report.converged = true;
            break;
        }
    }

    Ok((Codebook::new(n_tx, n_streams, bits, entries)?, report))
}

/// Held-out evaluation: average distortion on a fresh set drawn with `seed`.
pub fn held_out_distortion(cb: &Codebook, n_rx: usize, count: usize, seed: u64) -> Result<f64> {
    let eval = training_set(count, n_rx, cb.n_tx(), cb.n_streams(), seed)?;
    average_distortion(cb, &eval.items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{apply_phases, orthonormality_defect, PhaseVector};
    use crate::quantizer::distortion_sc_oe;
    use rand::Rng;
    use std::f64::consts::TAU;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_phases(r: &mut ChaCha8Rng, s: usize) -> PhaseVector {
        PhaseVector::new((0..s).map(|_| r.random::<f64>() * TAU))
    }

    #[test]
    fn random_codebook_basics() {
        let cb = random_codebook(2, 2, 1, 3).unwrap();
        assert_eq!(cb.len(), 2);
        assert!(cb.entries().iter().all(|e| orthonormality_defect(e) < 1e-10));
        assert_eq!(random_codebook(3, 2, 4, 11).unwrap(), random_codebook(3, 2, 4, 11).unwrap());
        assert!(random_codebook(2, 3, 2, 0).is_err());
        assert!(random_codebook(2, 2, 0, 0).is_err());
    }

    #[test]
    fn random_codebook_has_no_collisions() {
        let cb = random_codebook(2, 2, 4, 5).unwrap();
        for i in 0..cb.len() {
            for j in i + 1..cb.len() {
                assert!(distortion_sc_oe(&cb.entries()[i], &cb.entries()[j]).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn training_set_items_are_unitary() {
        let one = training_set(1, 3, 2, 1, 0).unwrap();
        assert_eq!(one.items[0].shape(), (2, 1));
        let ts = training_set(1000, 2, 2, 2, 1).unwrap();
        assert!(ts.items.iter().all(|v| orthonormality_defect(v) < 1e-8));
        assert_eq!(ts, training_set(1000, 2, 2, 2, 1).unwrap());
        assert!(training_set(0, 2, 2, 2, 1).is_err());
        assert!(training_set(5, 2, 2, 3, 1).is_err());
    }

    #[test]
    fn partition_rules() {
        let cb = random_codebook(2, 2, 2, 8).unwrap();
        let mut entries = cb.entries().to_vec();
        entries[3] = entries[1].clone();
        let dup = Codebook::new(2, 2, 2, entries).unwrap();
        let ts = training_set(200, 2, 2, 2, 4).unwrap();
        let regions = partition(&ts.items, &dup).unwrap();
        assert!(regions[3].is_empty());

        let same = vec![cb.entries()[2].clone(); 30];
        let regions = partition(&same, &cb).unwrap();
        assert_eq!(regions[2].len(), 30);

        let mut seen: Vec<usize> = regions.concat();
        seen.sort_unstable();
        assert_eq!(seen, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn partition_matches_distortion_table() {
        let cb = random_codebook(3, 2, 3, 2).unwrap();
        let ts = training_set(300, 3, 3, 2, 6).unwrap();
        let regions = partition(&ts.items, &cb).unwrap();
        for (k, region) in regions.iter().enumerate() {
            for &n in region {
                let table: Vec<f64> = cb
                    .entries()
                    .iter()
                    .map(|e| distortion_sc_oe(&ts.items[n], e).unwrap())
                    .collect();
                let best = (0..table.len()).min_by(|&a, &b| table[a].total_cmp(&table[b])).unwrap();
                assert_eq!(best, k);
            }
        }
        assert!(partition(&ts.items, &random_codebook(2, 2, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn correlation_properties() {
        let mut r = rng(3);
        let v = random_orthonormal(&mut r, 3, 2);
        let c = conditional_correlation(&[&v], 0).unwrap();
        let col = v.column(0);
        assert!((&c - &col * col.adjoint()).norm() < 1e-15);
        let neg = -&v;
        let c2 = conditional_correlation(&[&v, &neg], 0).unwrap();
        assert!((&c2 - &c).norm() < 1e-15);

        let ts = training_set(100, 2, 3, 2, 7).unwrap();
        let members: Vec<&ComplexMatrix> = ts.items.iter().collect();
        for s in 0..2 {
            let c = conditional_correlation(&members, s).unwrap();
            assert!((c.trace().re - 1.0).abs() < 1e-10);
            assert!((&c - c.adjoint()).norm() < 1e-15);
        }
        assert!(matches!(conditional_correlation(&[], 0), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn centroid_of_phase_orbit() {
        let mut r = rng(4);
        let v = random_orthonormal(&mut r, 2, 2);
        let c = centroid(&[&v]).unwrap();
        assert!(distortion_sc_oe(&v, &c).unwrap() < 1e-8);
        let vd = apply_phases(&v, &random_phases(&mut r, 2)).unwrap();
        let c2 = centroid(&[&v, &vd]).unwrap();
        assert!(distortion_sc_oe(&v, &c2).unwrap() < 1e-8);
        assert!(distortion_sc_oe(&c, &c2).unwrap() < 1e-8);
        assert!(matches!(centroid(&[]), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn centroid_beats_member_candidates() {
        // items spread around a common center so the region is a plausible cell
        let mut r = rng(5);
        let center = random_orthonormal(&mut r, 2, 2);
        let items: Vec<ComplexMatrix> = (0..100)
            .map(|_| {
                let noise = gaussian_matrix(&mut r, 2, 2) * num_complex::Complex64::new(0.3, 0.0);
                let rot = random_phases(&mut r, 2);
                apply_phases(&closest_unitary(&(&center + noise)).unwrap(), &rot).unwrap()
            })
            .collect();
        let members: Vec<&ComplexMatrix> = items.iter().collect();
        let c = centroid(&members).unwrap();
        assert!(orthonormality_defect(&c) < 1e-8);
        let avg = |cand: &ComplexMatrix| {
            items.iter().map(|v| distortion_sc_oe(v, cand).unwrap()).sum::<f64>() / items.len() as f64
        };
        let at_centroid = avg(&c);
        for cand in &items {
            assert!(at_centroid <= avg(cand));
        }
    }

    #[test]
    fn clusterable_data_converges_fast() {
        let centers = random_codebook(2, 2, 2, 21).unwrap();
        let mut r = rng(22);
        let items: Vec<ComplexMatrix> = (0..400)
            .map(|i| apply_phases(&centers.entries()[i % 4], &random_phases(&mut r, 2)).unwrap())
            .collect();
        let ts = TrainingSet {
            items,
            source_seed: 0,
        };
        let (cb, report) = lloyd_train(&ts, &LloydConfig::new(2, 99)).unwrap();
        assert!(report.iterations <= 2, "{report:?}");
        assert!(*report.distortion_history.last().unwrap() <= 1e-8);
        assert!(average_distortion(&cb, &ts.items).unwrap() <= 1e-8);
    }

    #[test]
    fn lloyd_is_monotone_and_deterministic() {
        let ts = training_set(640, 2, 2, 2, 31).unwrap();
        let cfg = LloydConfig::new(4, 32);
        let (cb, report) = lloyd_train(&ts, &cfg).unwrap();
        assert!(report.distortion_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(cb.entries().iter().all(|e| orthonormality_defect(e) < 1e-8));
        assert_eq!(report.distortion_history.len(), report.iterations + 1);
        let (cb2, report2) = lloyd_train(&ts, &cfg).unwrap();
        assert_eq!(cb, cb2);
        assert_eq!(report, report2);
        if report.converged {
            let h = &report.distortion_history;
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            assert!((a - b) / a <= cfg.epsilon);
        }
    }

    #[test]
    fn lloyd_preconditions() {
        let ts = training_set(100, 2, 2, 2, 1).unwrap();
        assert!(lloyd_train(&ts, &LloydConfig::new(4, 0)).is_err());
        let mut cfg = LloydConfig::new(2, 0);
        cfg.epsilon = 0.0;
        assert!(lloyd_train(&ts, &cfg).is_err());
        cfg.epsilon = 1e-3;
        cfg.max_iter = 0;
        assert!(lloyd_train(&ts, &cfg).is_err());
    }

    #[test]
    fn phase_invariance_of_training() {
        let ts = training_set(400, 2, 2, 2, 41).unwrap();
        let mut r = rng(42);
        let rotated = TrainingSet {
            items: ts
                .items
                .iter()
                .map(|v| apply_phases(v, &random_phases(&mut r, 2)).unwrap())
                .collect(),
            source_seed: ts.source_seed,
        };
        let cfg = LloydConfig::new(3, 43);
        let (cb_a, rep_a) = lloyd_train(&ts, &cfg).unwrap();
        let (cb_b, rep_b) = lloyd_train(&rotated, &cfg).unwrap();
        assert_eq!(rep_a.distortion_history.len(), rep_b.distortion_history.len());
        for (a, b) in rep_a.distortion_history.iter().zip(&rep_b.distortion_history) {
            assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in cb_a.entries().iter().zip(cb_b.entries()) {
            assert!(distortion_sc_oe(a, b).unwrap() < 1e-8);
        }
        assert_eq!(partition(&ts.items, &cb_a).unwrap(), partition(&rotated.items, &cb_a).unwrap());
    }

    #[test]
    fn average_distortion_examples() {
        let cb = random_codebook(2, 2, 3, 50).unwrap();
        assert!(average_distortion(&cb, cb.entries()).unwrap() < 1e-12);
        let ts = training_set(200, 2, 2, 2, 51).unwrap();
        let two_pass: f64 = ts
            .items
            .iter()
            .map(|v| {
                cb.entries()
                    .iter()
                    .map(|e| distortion_sc_oe(v, e).unwrap())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / 200.0;
        assert!((average_distortion(&cb, &ts.items).unwrap() - two_pass).abs() < 1e-12);
        assert!(average_distortion(&cb, &[]).is_err());
    }
}
