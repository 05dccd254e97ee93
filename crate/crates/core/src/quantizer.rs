//! Codeword selection for limited-rate feedback.
//!
//! The right singular matrix of a channel is only defined up to a diagonal
//! unitary factor, so the optimal-Euclidean criterion (SC-OE) compares `V D`
//! against each codeword with the per-column phases `D` chosen in closed form:
//! `θ_k = −arg(v̂_k^H v_k)`, which leaves the distortion
//! `2S − 2 Σ_s |v̂_s^H v_s|`. The plain Euclidean criterion (SC-E) skips the
//! phase alignment; the `λ_min` criterion maximizes the smallest singular value
//! of the effective channel `H V̂`.

use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{param, Result};
use crate::linalg::{frob_dist_sq, svd_ordered, ComplexMatrix, PhaseVector};

/// Winner of a codebook search. Smaller `distortion` is always better; the
/// `λ_min` criterion stores the negated minimum singular value.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub index: usize,
    pub phases: PhaseVector,
    pub distortion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    ScE,
    ScOe,
    LambdaMin,
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sc-e" => Ok(Criterion::ScE),
            "sc-oe" => Ok(Criterion::ScOe),
            "lambda-min" => Ok(Criterion::LambdaMin),
            other => Err(format!("unknown selection criterion `{other}`")),
        }
    }
}

fn check_shapes(v: &ComplexMatrix, vhat: &ComplexMatrix) -> Result<()> {
    if v.shape() != vhat.shape() {
        return param(format!(
            "shape mismatch {:?} vs codeword {:?}",
            v.shape(),
            vhat.shape()
        ));
    }
    Ok(())
}

/// `v̂_s^H v_s` for each column.
fn column_inners<'a>(v: &'a ComplexMatrix, vhat: &'a ComplexMatrix) -> impl Iterator<Item = Complex64> + 'a {
    let n = v.nrows();
    let (a, b) = (vhat.as_slice(), v.as_slice());
    (0..v.ncols()).map(move |s| {
        let range = s * n..(s + 1) * n;
        a[range.clone()]
            .iter()
            .zip(&b[range])
            .map(|(x, y)| x.conj() * y)
            .sum()
    })
}

/// Diagonal phases minimizing `‖V D − V̂‖_F`. A vanishing inner product yields
/// θ = 0, since every angle is then equally good.
pub fn optimal_phases(v: &ComplexMatrix, vhat: &ComplexMatrix) -> Result<PhaseVector> {
    check_shapes(v, vhat)?;
    Ok(PhaseVector::new(column_inners(v, vhat).map(|z| {
        if z.norm() == 0.0 {
            0.0
        } else {
            -z.arg()
        }
    })))
}

/// SC-E distortion: plain squared Frobenius distance.
pub fn distortion_sc_e(v: &ComplexMatrix, vhat: &ComplexMatrix) -> Result<f64> {
    frob_dist_sq(v, vhat)
}

/// SC-OE distortion `2S − 2 Σ_s |v̂_s^H v_s|`, clamped at zero.
pub fn distortion_sc_oe(v: &ComplexMatrix, vhat: &ComplexMatrix) -> Result<f64> {
    check_shapes(v, vhat)?;
    Ok(sc_oe_unchecked(v, vhat))
}

#[inline]
pub(crate) fn sc_oe_unchecked(v: &ComplexMatrix, vhat: &ComplexMatrix) -> f64 {
    let s = v.ncols() as f64;
    let total: f64 = column_inners(v, vhat).map(|z| z.norm()).sum();
    (2.0 * s - 2.0 * total).max(0.0)
}

fn check_codebook(v: &ComplexMatrix, cb: &Codebook) -> Result<()> {
    if v.shape() != (cb.n_tx(), cb.n_streams()) {
        return param(format!(
            "matrix shape {:?} does not match a {}x{} codebook",
            v.shape(),
            cb.n_tx(),
            cb.n_streams()
        ));
    }
    Ok(())
}

/// First index attaining the minimum.
fn argmin(scores: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    argmin_tol(scores, 0.0)
}

/// First index attaining the minimum, where scores within `rel_tol` (relative
/// to the running best, floored at 1) count as ties.
fn argmin_tol(scores: impl Iterator<Item = f64>, rel_tol: f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in scores.enumerate() {
        match best {
            Some((_, b)) if !(d < b - rel_tol * b.abs().max(1.0)) => {}
            _ => best = Some((i, d)),
        }
    }
    best
}

/// Singular values agreeing to this relative precision are treated as equal.
const LAMBDA_TIE_TOL: f64 = 1e-12;

pub fn select_sc_oe(v: &ComplexMatrix, cb: &Codebook) -> Result<SelectionResult> {
    check_codebook(v, cb)?;
    let (index, distortion) = argmin(cb.entries().iter().map(|e| sc_oe_unchecked(v, e)))
        .expect("codebooks are never empty");
    Ok(SelectionResult {
        index,
        phases: optimal_phases(v, &cb.entries()[index])?,
        distortion,
    })
}

/// Index-only SC-OE search used in the training inner loop.
pub(crate) fn nearest_sc_oe(v: &ComplexMatrix, entries: &[ComplexMatrix]) -> (usize, f64) {
    argmin(entries.iter().map(|e| sc_oe_unchecked(v, e))).expect("non-empty codebook")
}

pub fn select_sc_e(v: &ComplexMatrix, cb: &Codebook) -> Result<SelectionResult> {
    check_codebook(v, cb)?;
    let mut scores = Vec::with_capacity(cb.len());
    for e in cb.entries() {
        scores.push(frob_dist_sq(v, e)?);
    }
    let (index, distortion) = argmin(scores.into_iter()).expect("codebooks are never empty");
    Ok(SelectionResult {
        index,
        phases: PhaseVector::zeros(v.ncols()),
        distortion,
    })
}

/// Smallest singular value of `H V̂`.
pub fn min_singular_value(h: &ComplexMatrix, vhat: &ComplexMatrix) -> Result<f64> {
    if h.ncols() != vhat.nrows() {
        return param(format!(
            "channel {:?} cannot multiply codeword {:?}",
            h.shape(),
            vhat.shape()
        ));
    }
    let t = svd_ordered(&(h * vhat))?;
    Ok(*t.sigma.last().expect("non-empty"))
}

pub fn select_lambda_min(h: &ComplexMatrix, cb: &Codebook) -> Result<SelectionResult> {
    if h.ncols() != cb.n_tx() || h.nrows() < cb.n_streams() {
        return param(format!(
            "channel {:?} incompatible with a {}x{} codebook",
            h.shape(),
            cb.n_tx(),
            cb.n_streams()
        ));
    }
    let mut scores = Vec::with_capacity(cb.len());
    for e in cb.entries() {
        scores.push(-min_singular_value(h, e)?);
    }
    let (index, distortion) =
        argmin_tol(scores.into_iter(), LAMBDA_TIE_TOL).expect("codebooks are never empty");
    Ok(SelectionResult {
        index,
        phases: PhaseVector::zeros(cb.n_streams()),
        distortion,
    })
}

/// Dispatches on `criterion`; `v` is the truncated right singular matrix of `h`.
pub fn select(criterion: Criterion, h: &ComplexMatrix, v: &ComplexMatrix, cb: &Codebook) -> Result<SelectionResult> {
    match criterion {
        Criterion::ScE => select_sc_e(v, cb),
        Criterion::ScOe => select_sc_oe(v, cb),
        Criterion::LambdaMin => select_lambda_min(h, cb),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::apply_phases;
    use crate::random::{gaussian_matrix, random_orthonormal};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_phases(r: &mut ChaCha8Rng, s: usize) -> PhaseVector {
        PhaseVector::new((0..s).map(|_| r.random::<f64>() * TAU))
    }

    fn random_codebook(r: &mut ChaCha8Rng, n: usize, s: usize, bits: u32) -> Codebook {
        let entries = (0..1 << bits).map(|_| random_orthonormal(r, n, s)).collect();
        Codebook::new(n, s, bits, entries).unwrap()
    }

    #[test]
    fn identical_and_rotated_codewords() {
        let mut r = rng(1);
        let v = random_orthonormal(&mut r, 2, 2);
        let p = optimal_phases(&v, &v).unwrap();
        assert!(p.angles().iter().all(|&t| t < 1e-12 || TAU - t < 1e-12));
        assert!(distortion_sc_oe(&v, &v).unwrap() < 1e-12);

        let alpha = random_phases(&mut r, 2);
        let vhat = apply_phases(&v, &alpha).unwrap();
        let p = optimal_phases(&v, &vhat).unwrap();
        for (a, b) in p.angles().iter().zip(alpha.angles()) {
            let d = (a - b).rem_euclid(TAU);
            assert!(d < 1e-10 || TAU - d < 1e-10);
        }
        assert!(distortion_sc_oe(&v, &vhat).unwrap() < 1e-12);
    }

    #[test]
    fn phase_grid_oracle() {
        let mut r = rng(2);
        for _ in 0..50 {
            let v = random_orthonormal(&mut r, 2, 2);
            let vhat = random_orthonormal(&mut r, 2, 2);
            let p = optimal_phases(&v, &vhat).unwrap();
            let closed = frob_dist_sq(&apply_phases(&v, &p).unwrap(), &vhat).unwrap();
            let mut grid_min = 0.0;
            for k in 0..2 {
                let mut best = f64::INFINITY;
                for g in 0..1024 {
                    let ph = Complex64::from_polar(1.0, TAU * g as f64 / 1024.0);
                    let d: f64 = (0..2).map(|i| (v[(i, k)] * ph - vhat[(i, k)]).norm_sqr()).sum();
                    best = best.min(d);
                }
                grid_min += best;
            }
            assert!(closed <= grid_min + 1e-4);
        }
    }

    #[test]
    fn sc_e_examples() {
        let mut r = rng(3);
        let v = random_orthonormal(&mut r, 2, 2);
        assert_eq!(distortion_sc_e(&v, &v).unwrap(), 0.0);
        assert!((distortion_sc_e(&v, &(-&v)).unwrap() - 8.0).abs() < 1e-12);
        let w = random_orthonormal(&mut r, 2, 2);
        assert_eq!(distortion_sc_e(&v, &w).unwrap(), frob_dist_sq(&v, &w).unwrap());
    }

    #[test]
    fn orthogonal_columns_give_maximum() {
        // v̂_s ⊥ v_s for both columns
        let v = ComplexMatrix::identity(2, 2);
        let mut vhat = ComplexMatrix::zeros(2, 2);
        vhat[(1, 0)] = Complex64::new(1.0, 0.0);
        vhat[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!((distortion_sc_oe(&v, &vhat).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(optimal_phases(&v, &vhat).unwrap(), PhaseVector::zeros(2));
    }

    #[test]
    fn closed_form_matches_direct_evaluation() {
        let mut r = rng(4);
        for &(n, s) in &[(2, 2), (3, 2), (4, 1)] {
            for _ in 0..100 {
                let v = random_orthonormal(&mut r, n, s);
                let vhat = random_orthonormal(&mut r, n, s);
                let p = optimal_phases(&v, &vhat).unwrap();
                let direct = frob_dist_sq(&apply_phases(&v, &p).unwrap(), &vhat).unwrap();
                assert!((distortion_sc_oe(&v, &vhat).unwrap() - direct).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn selection_examples() {
        let mut r = rng(5);
        let v = random_orthonormal(&mut r, 2, 2);
        let mut entries: Vec<_> = (0..4).map(|_| random_orthonormal(&mut r, 2, 2)).collect();
        entries[2] = v.clone();
        let cb = Codebook::new(2, 2, 2, entries.clone()).unwrap();
        for sel in [select_sc_oe(&v, &cb).unwrap(), select_sc_e(&v, &cb).unwrap()] {
            assert_eq!(sel.index, 2);
            assert!(sel.distortion < 1e-12);
        }

        entries[2] = apply_phases(&v, &PhaseVector::new([1.0, 4.0])).unwrap();
        let cb = Codebook::new(2, 2, 2, entries).unwrap();
        let sel = select_sc_oe(&v, &cb).unwrap();
        assert_eq!(sel.index, 2);
        assert!(sel.distortion < 1e-12);
    }

    #[test]
    fn sc_e_misses_rotated_copy() {
        let v = ComplexMatrix::identity(2, 2);
        let flipped = apply_phases(&v, &PhaseVector::new([PI, 0.0])).unwrap();
        // W is a small rotation of V, so ‖V − W‖² < 4 = ‖V − flipped‖²
        let t = 0.3f64;
        let w = ComplexMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(t.cos(), 0.0),
                Complex64::new(-t.sin(), 0.0),
                Complex64::new(t.sin(), 0.0),
                Complex64::new(t.cos(), 0.0),
            ],
        );
        assert!(frob_dist_sq(&v, &w).unwrap() < 8.0);
        let cb = Codebook::new(2, 2, 1, vec![flipped, w]).unwrap();
        assert_eq!(select_sc_e(&v, &cb).unwrap().index, 1);
        let oe = select_sc_oe(&v, &cb).unwrap();
        assert_eq!(oe.index, 0);
        assert!(oe.distortion < 1e-12);
    }

    #[test]
    fn brute_force_scans() {
        let mut r = rng(6);
        for _ in 0..20 {
            // N = 3 so that λ_min scores differ between codewords
            let cb = random_codebook(&mut r, 3, 2, 4);
            let h = gaussian_matrix(&mut r, 2, 3);
            let v = svd_ordered(&h).unwrap().truncate(2).unwrap().v;
            let table_oe: Vec<f64> = cb
                .entries()
                .iter()
                .map(|e| {
                    let p = optimal_phases(&v, e).unwrap();
                    frob_dist_sq(&apply_phases(&v, &p).unwrap(), e).unwrap()
                })
                .collect();
            let table_e: Vec<f64> = cb.entries().iter().map(|e| frob_dist_sq(&v, e).unwrap()).collect();
            let table_l: Vec<f64> = cb
                .entries()
                .iter()
                .map(|e| *svd_ordered(&(&h * e)).unwrap().sigma.last().unwrap())
                .collect();
            let min_idx = |t: &[f64]| (0..t.len()).min_by(|&a, &b| t[a].total_cmp(&t[b])).unwrap();
            let max_idx = |t: &[f64]| (0..t.len()).max_by(|&a, &b| t[a].total_cmp(&t[b]).then(b.cmp(&a))).unwrap();
            assert_eq!(select_sc_oe(&v, &cb).unwrap().index, min_idx(&table_oe));
            assert_eq!(select_sc_e(&v, &cb).unwrap().index, min_idx(&table_e));
            let l = select_lambda_min(&h, &cb).unwrap();
            assert_eq!(l.index, max_idx(&table_l));
            assert!((l.distortion + table_l[l.index]).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_min_examples() {
        let mut r = rng(7);
        let h = gaussian_matrix(&mut r, 2, 2);
        let t = svd_ordered(&h).unwrap().truncate(2).unwrap();
        let mut entries: Vec<_> = (0..4).map(|_| random_orthonormal(&mut r, 2, 2)).collect();
        entries[3] = t.v.clone();
        let cb = Codebook::new(2, 2, 2, entries).unwrap();
        let sel = select_lambda_min(&h, &cb).unwrap();
        // any unitary 2x2 precoder preserves the singular values of a 2x2 channel
        assert!((sel.distortion + t.sigma[1]).abs() < 1e-10);

        let eye = ComplexMatrix::identity(2, 2);
        assert_eq!(select_lambda_min(&eye, &cb).unwrap().index, 0);

        // with S < N the right singular subspace is strictly best
        let h = gaussian_matrix(&mut r, 3, 3);
        let t = svd_ordered(&h).unwrap().truncate(2).unwrap();
        let mut entries: Vec<_> = (0..8).map(|_| random_orthonormal(&mut r, 3, 2)).collect();
        entries[5] = t.v.clone();
        let cb = Codebook::new(3, 2, 3, entries).unwrap();
        let sel = select_lambda_min(&h, &cb).unwrap();
        assert_eq!(sel.index, 5);
        assert!((sel.distortion + t.sigma[1]).abs() < 1e-10);
    }

    #[test]
    fn shape_errors() {
        let mut r = rng(8);
        let cb = random_codebook(&mut r, 2, 2, 1);
        let v = random_orthonormal(&mut r, 3, 2);
        assert!(select_sc_oe(&v, &cb).is_err());
        assert!(select_sc_e(&v, &cb).is_err());
        assert!(select_lambda_min(&gaussian_matrix(&mut r, 2, 3), &cb).is_err());
        assert!(optimal_phases(&v, &cb.entries()[0]).is_err());
    }

    proptest! {
        #[test]
        fn sc_oe_bounds_and_invariance(seed in any::<u64>()) {
            let mut r = rng(seed);
            let v = random_orthonormal(&mut r, 3, 2);
            let vhat = random_orthonormal(&mut r, 3, 2);
            let oe = distortion_sc_oe(&v, &vhat).unwrap();
            prop_assert!(oe <= distortion_sc_e(&v, &vhat).unwrap() + 1e-12);
            prop_assert!((0.0..=4.0).contains(&oe));
            let vd = apply_phases(&v, &random_phases(&mut r, 2)).unwrap();
            let vhatd = apply_phases(&vhat, &random_phases(&mut r, 2)).unwrap();
            prop_assert!((distortion_sc_oe(&vd, &vhatd).unwrap() - oe).abs() < 1e-12);

            let cb = random_codebook(&mut r, 3, 2, 3);
            let a = select_sc_oe(&v, &cb).unwrap();
            let b = select_sc_oe(&vd, &cb).unwrap();
            prop_assert_eq!(a.index, b.index);
            prop_assert!(a.distortion <= select_sc_e(&v, &cb).unwrap().distortion + 1e-12);
            let p = a.phases.clone();
            let recomputed = frob_dist_sq(&apply_phases(&v, &p).unwrap(), &cb.entries()[a.index]).unwrap();
            prop_assert!((recomputed - a.distortion).abs() < 1e-10);
        }
    }
}
