//! Linear equalizers and their soft bit metrics.
//!
//! Received blocks are `M × K` matrices whose column `k` is `y_k`. Each
//! equalizer produces `r = G y` (an `S × K` matrix) together with the
//! per-stream quantities its metric needs:
//!
//! | receiver | equalizer `G` | metric for `x ∈ χ_b^i` |
//! |---|---|---|
//! | ZF | `(HV_L)^†` | `|r − x|² / ‖g_s‖²` |
//! | MMSE | `[(HV_L)^H HV_L + σ²I]^{-1} (HV_L)^H` | `W_ss/(1−W_ss) · |r/W_ss − x|²` |
//! | SVD | `(Ū D)^H` | `|r − λ̃_s x|² / σ̃_s²` |
//! | perfect CSIT | `Ū^H` | `|r − λ_s x|²` |

use num_complex::Complex64;

use crate::bicm::qam::{Qam16, BITS_PER_SYMBOL, POINTS};
use crate::bicm::BitMetricTable;
use crate::error::{param, Error, Result};
use crate::linalg::{svd_ordered, ComplexMatrix, PhaseVector, SvdTriple, RANK_TOL};

#[derive(Debug, Clone, PartialEq)]
pub enum StreamParams {
    /// `‖g_s‖²`, squared norm of row `s` of `G`.
    Zf { g_norm_sq: Vec<f64> },
    /// Diagonal of `W = [I + σ²((HV_L)^H HV_L)^{-1}]^{-1}`.
    Mmse { w: Vec<f64> },
    /// Effective gain `λ̃_s` and interference-plus-noise variance `σ̃_s²`.
    Svd { gain: Vec<f64>, variance: Vec<f64> },
    /// Singular values `λ_s`.
    Perfect { lambda: Vec<f64> },
}

/// Equalizer output for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizedBlock {
    /// `S × K`; entry `(s, k)` is `r_{k,s}`.
    pub r: ComplexMatrix,
    pub params: StreamParams,
}

impl EqualizedBlock {
    pub fn streams(&self) -> usize {
        self.r.nrows()
    }

    pub fn symbols(&self) -> usize {
        self.r.ncols()
    }
}

fn effective_channel(h: &ComplexMatrix, v_l: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h.ncols() != v_l.nrows() {
        return param(format!("channel {:?} and precoder {:?} disagree", h.shape(), v_l.shape()));
    }
    if y.nrows() != h.nrows() {
        return param(format!("{} receive antennas but {}-row block", h.nrows(), y.nrows()));
    }
    if v_l.ncols() > h.nrows() {
        return Err(Error::Rank(format!(
            "{} streams over {} receive antennas",
            v_l.ncols(),
            h.nrows()
        )));
    }
    Ok(h * v_l)
}

fn check_rank(a: &SvdTriple) -> Result<()> {
    let smax = a.sigma[0];
    let smin = *a.sigma.last().expect("non-empty");
    if smax == 0.0 || smin <= RANK_TOL * smax {
        return Err(Error::Rank(format!(
            "effective channel singular values {:?}",
            a.sigma
        )));
    }
    Ok(())
}

/// Zero-forcing equalizer. The pseudoinverse is formed from the SVD of `HV_L`.
pub fn zf_equalize(h: &ComplexMatrix, v_l: &ComplexMatrix, y: &ComplexMatrix) -> Result<EqualizedBlock> {
    let g = zf_matrix(h, v_l)?;
    let g_norm_sq = g.row_iter().map(|row| row.norm_squared()).collect();
    Ok(EqualizedBlock {
        r: &g * y,
        params: StreamParams::Zf { g_norm_sq },
    })
}

/// `(HV_L)^†`.
pub fn zf_matrix(h: &ComplexMatrix, v_l: &ComplexMatrix) -> Result<ComplexMatrix> {
    let a = effective_channel(h, v_l, &ComplexMatrix::zeros(h.nrows(), 0))?;
    let t = svd_ordered(&a)?;
    check_rank(&t)?;
    let mut w_scaled = t.v.clone();
    for (k, &s) in t.sigma.iter().enumerate() {
        w_scaled.column_mut(k).unscale_mut(s);
    }
    Ok(w_scaled * t.u.adjoint())
}

pub fn mmse_equalize(h: &ComplexMatrix, v_l: &ComplexMatrix, sigma2: f64, y: &ComplexMatrix) -> Result<EqualizedBlock> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return param(format!("noise variance must be positive, got {sigma2}"));
    }
    let a = effective_channel(h, v_l, y)?;
    check_rank(&svd_ordered(&a)?)?;
    let s = a.ncols();
    let gram = a.adjoint() * &a;
    let eye = ComplexMatrix::identity(s, s);
    let reg = (&gram + &eye * Complex64::new(sigma2, 0.0))
        .try_inverse()
        .ok_or_else(|| Error::Rank("regularized Gram matrix is singular".into()))?;
    let g = reg * a.adjoint();
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Rank("Gram matrix of the effective channel is singular".into()))?;
    let w_mat = (&eye + gram_inv * Complex64::new(sigma2, 0.0))
        .try_inverse()
        .ok_or_else(|| Error::Rank("MMSE bias matrix is singular".into()))?;
    let w = (0..s).map(|k| w_mat[(k, k)].re).collect();
    Ok(EqualizedBlock {
        r: g * y,
        params: StreamParams::Mmse { w },
    })
}

/// Per-stream `(λ̃_s, σ̃_s²)` of the Gaussian interference model for the SVD
/// receiver: `λ̃_s = λ_s |v_s^H v_{L,s}|` and
/// `σ̃_s² = λ_s² Σ_{i≠s} |v_s^H v_{L,i}|² + σ²`.
///
/// `t` is the channel SVD truncated to the stream count. The result depends on
/// the phases only through the magnitudes, so `phases` is validated but
/// otherwise unused.
pub fn svd_receiver_params(
    t: &SvdTriple,
    v_l: &ComplexMatrix,
    phases: &PhaseVector,
    sigma2: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = t.rank();
    if v_l.shape() != t.v.shape() {
        return param(format!(
            "precoder {:?} does not match truncated right singular matrix {:?}",
            v_l.shape(),
            t.v.shape()
        ));
    }
    if phases.len() != s {
        return param(format!("{} phases for {s} streams", phases.len()));
    }
    if !(sigma2 > 0.0) {
        return param(format!("noise variance must be positive, got {sigma2}"));
    }
    let cross = t.v.adjoint() * v_l;
    let mut gain = Vec::with_capacity(s);
    let mut variance = Vec::with_capacity(s);
    for k in 0..s {
        let lam = t.sigma[k];
        gain.push(lam * cross[(k, k)].norm());
        let leak: f64 = (0..s).filter(|&i| i != k).map(|i| cross[(k, i)].norm_sqr()).sum();
        variance.push(lam * lam * leak + sigma2);
    }
    Ok((gain, variance))
}

/// `r_{k,s} = e^{−jθ_s} u_s^H y_k`, carrying precomputed `(λ̃, σ̃²)`.
pub fn svd_receiver_equalize(
    t: &SvdTriple,
    phases: &PhaseVector,
    params: (Vec<f64>, Vec<f64>),
    y: &ComplexMatrix,
) -> Result<EqualizedBlock> {
    let s = t.rank();
    if phases.len() != s || params.0.len() != s || params.1.len() != s {
        return param(format!("stream count mismatch for {s} streams"));
    }
    if y.nrows() != t.u.nrows() {
        return param(format!("{}-row block for {} receive antennas", y.nrows(), t.u.nrows()));
    }
    let mut g = t.u.adjoint();
    for (k, ph) in phases.phasors().enumerate() {
        let c = ph.conj();
        for z in g.row_mut(k).iter_mut() {
            *z *= c;
        }
    }
    Ok(EqualizedBlock {
        r: g * y,
        params: StreamParams::Svd {
            gain: params.0,
            variance: params.1,
        },
    })
}

/// `r′ = Ū^H y` for a transmitter using `V_L = V̄`.
pub fn perfect_csit_equalize(t: &SvdTriple, y: &ComplexMatrix) -> Result<EqualizedBlock> {
    if y.nrows() != t.u.nrows() {
        return param(format!("{}-row block for {} receive antennas", y.nrows(), t.u.nrows()));
    }
    Ok(EqualizedBlock {
        r: t.u.adjoint() * y,
        params: StreamParams::Perfect {
            lambda: t.sigma.clone(),
        },
    })
}

/// Fills a table with `min_{x ∈ χ_b^i} dist(s, r_{k,s}, x)`.
fn metric_table(
    eq: &EqualizedBlock,
    qam: &Qam16,
    dist: impl Fn(usize, Complex64, Complex64) -> f64,
) -> Result<BitMetricTable> {
    let (streams, symbols) = eq.r.shape();
    let mut values = Vec::with_capacity(symbols * streams * BITS_PER_SYMBOL);
    let mut table = [0.0; POINTS];
    for k in 0..symbols {
        for s in 0..streams {
            let r = eq.r[(s, k)];
            for (d, &x) in table.iter_mut().zip(qam.points()) {
                *d = dist(s, r, x);
            }
            values.extend_from_slice(&qam.subset_minima(&table));
        }
    }
    BitMetricTable::new(symbols, streams, BITS_PER_SYMBOL, values)
}

fn per_stream<'a>(v: &'a [f64], eq: &EqualizedBlock) -> Result<&'a [f64]> {
    if v.len() != eq.streams() {
        return param(format!("{} parameters for {} streams", v.len(), eq.streams()));
    }
    Ok(v)
}

pub fn zf_metrics(eq: &EqualizedBlock, qam: &Qam16) -> Result<BitMetricTable> {
    let StreamParams::Zf { g_norm_sq } = &eq.params else {
        return param("ZF metrics need ZF equalizer output");
    };
    let g = per_stream(g_norm_sq, eq)?;
    let inv: Vec<f64> = g.iter().map(|&x| 1.0 / x).collect();
    metric_table(eq, qam, |s, r, x| (r - x).norm_sqr() * inv[s])
}

pub fn mmse_metrics(eq: &EqualizedBlock, qam: &Qam16) -> Result<BitMetricTable> {
    let StreamParams::Mmse { w } = &eq.params else {
        return param("MMSE metrics need MMSE equalizer output");
    };
    let w = per_stream(w, eq)?;
    if let Some(bad) = w.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return param(format!("MMSE diagonal {bad} outside (0, 1)"));
    }
    let weight: Vec<f64> = w.iter().map(|&x| x / (1.0 - x)).collect();
    let inv: Vec<f64> = w.iter().map(|&x| 1.0 / x).collect();
    metric_table(eq, qam, |s, r, x| weight[s] * (r * inv[s] - x).norm_sqr())
}

pub fn svd_receiver_metrics(eq: &EqualizedBlock, qam: &Qam16) -> Result<BitMetricTable> {
    let StreamParams::Svd { gain, variance } = &eq.params else {
        return param("SVD-receiver metrics need SVD-receiver output");
    };
    let gain = per_stream(gain, eq)?;
    let inv: Vec<f64> = per_stream(variance, eq)?.iter().map(|&v| 1.0 / v).collect();
    metric_table(eq, qam, |s, r, x| (r - x * gain[s]).norm_sqr() * inv[s])
}

pub fn perfect_csit_metrics(eq: &EqualizedBlock, qam: &Qam16) -> Result<BitMetricTable> {
    let StreamParams::Perfect { lambda } = &eq.params else {
        return param("perfect-CSIT metrics need U^H equalizer output");
    };
    let lambda = per_stream(lambda, eq)?;
    metric_table(eq, qam, |s, r, x| (r - x * lambda[s]).norm_sqr())
}

/// Metrics for whichever receiver produced `eq`.
pub fn bit_metrics(eq: &EqualizedBlock, qam: &Qam16) -> Result<BitMetricTable> {
    match eq.params {
        StreamParams::Zf { .. } => zf_metrics(eq, qam),
        StreamParams::Mmse { .. } => mmse_metrics(eq, qam),
        StreamParams::Svd { .. } => svd_receiver_metrics(eq, qam),
        StreamParams::Perfect { .. } => perfect_csit_metrics(eq, qam),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::apply_phases;
    use crate::quantizer::optimal_phases;
    use crate::random::{complex_gaussian, gaussian_matrix, random_orthonormal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn symbols(r: &mut ChaCha8Rng, qam: &Qam16, s: usize, k: usize) -> (ComplexMatrix, Vec<usize>) {
        let labels: Vec<usize> = (0..s * k).map(|_| r.random_range(0..16)).collect();
        let x = ComplexMatrix::from_fn(s, k, |i, j| qam.point(labels[j * s + i]));
        (x, labels)
    }

    fn noise(r: &mut ChaCha8Rng, m: usize, k: usize, sigma2: f64) -> ComplexMatrix {
        ComplexMatrix::from_fn(m, k, |_, _| complex_gaussian(r) * sigma2.sqrt())
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn zf_perfect_csit_gain_and_inverse() {
        let mut r = rng(1);
        let qam = Qam16::new();
        for &(m, n) in &[(2, 2), (3, 2)] {
            let h = gaussian_matrix(&mut r, m, n);
            let t = svd_ordered(&h).unwrap().truncate(2).unwrap();
            let (x, _) = symbols(&mut r, &qam, 2, 10);
            let y = &h * &t.v * &x;
            let eq = zf_equalize(&h, &t.v, &y).unwrap();
            assert!((&eq.r - &x).norm() < 1e-10);
            let StreamParams::Zf { g_norm_sq } = &eq.params else { unreachable!() };
            for s in 0..2 {
                assert!(rel_close(g_norm_sq[s], 1.0 / (t.sigma[s] * t.sigma[s]), 1e-10));
            }
            let v_l = random_orthonormal(&mut r, n, 2);
            let g = zf_matrix(&h, &v_l).unwrap();
            assert!((g * (&h * &v_l) - ComplexMatrix::identity(2, 2)).norm() < 1e-10);
        }
    }

    #[test]
    fn zf_rank_error() {
        let mut h = ComplexMatrix::zeros(2, 2);
        h[(0, 0)] = Complex64::new(1.0, 0.0);
        let v = ComplexMatrix::identity(2, 2);
        assert!(matches!(zf_equalize(&h, &v, &ComplexMatrix::zeros(2, 1)), Err(Error::Rank(_))));
        assert!(matches!(mmse_equalize(&h, &v, 0.1, &ComplexMatrix::zeros(2, 1)), Err(Error::Rank(_))));
    }

    #[test]
    fn zf_metric_properties() {
        let mut r = rng(2);
        let qam = Qam16::new();
        let h = gaussian_matrix(&mut r, 2, 2);
        let v_l = random_orthonormal(&mut r, 2, 2);
        let (x, labels) = symbols(&mut r, &qam, 2, 20);
        let y = &h * &v_l * &x;
        let eq = zf_equalize(&h, &v_l, &y).unwrap();
        let table = zf_metrics(&eq, &qam).unwrap();
        for k in 0..20 {
            for s in 0..2 {
                let label = labels[k * 2 + s];
                for i in 0..4 {
                    let b = crate::bicm::qam::label_bit(label, i) as u8;
                    assert!(table.get(k, s, i, b) < 1e-18);
                }
            }
        }

        // direct subset scan on a noisy block
        let y = &y + noise(&mut r, 2, 20, 0.2);
        let eq = zf_equalize(&h, &v_l, &y).unwrap();
        let table = zf_metrics(&eq, &qam).unwrap();
        let StreamParams::Zf { g_norm_sq } = &eq.params else { unreachable!() };
        for k in 0..20 {
            for s in 0..2 {
                for i in 0..4 {
                    for b in 0..2u8 {
                        let want = qam
                            .subset(i, b)
                            .iter()
                            .map(|&l| (eq.r[(s, k)] - qam.point(l)).norm_sqr() / g_norm_sq[s])
                            .fold(f64::INFINITY, f64::min);
                        assert!(rel_close(table.get(k, s, i, b), want, 1e-12));
                    }
                }
            }
        }

        // per-stream positive scaling keeps each slot's preferred bit
        let scaled = table.scale_streams(&[3.0, 0.25]);
        for (a, b) in table.values().iter().zip(scaled.values()) {
            assert_eq!(a[0] < a[1], b[0] < b[1]);
        }
    }

    #[test]
    fn mmse_properties() {
        let mut r = rng(3);
        let qam = Qam16::new();
        let h = gaussian_matrix(&mut r, 3, 2);
        let t = svd_ordered(&h).unwrap().truncate(2).unwrap();
        let sigma2 = 0.05;
        let (x, labels) = symbols(&mut r, &qam, 2, 8);
        let y = &h * &t.v * &x + noise(&mut r, 3, 8, sigma2);
        let eq = mmse_equalize(&h, &t.v, sigma2, &y).unwrap();
        let StreamParams::Mmse { w } = &eq.params else { unreachable!() };
        for s in 0..2 {
            let l2 = t.sigma[s] * t.sigma[s];
            assert!(rel_close(w[s], l2 / (l2 + sigma2), 1e-10));
        }

        // small-σ² limit approaches ZF
        let v_l = random_orthonormal(&mut r, 2, 2);
        let y2 = &h * &v_l * &x;
        let a = mmse_equalize(&h, &v_l, 1e-12, &y2).unwrap();
        let b = zf_equalize(&h, &v_l, &y2).unwrap();
        assert!((&a.r - &b.r).norm() < 1e-6);

        let eq = mmse_equalize(&h, &v_l, 0.3, &y2).unwrap();
        let StreamParams::Mmse { w } = &eq.params else { unreachable!() };
        assert!(w.iter().all(|&v| v > 0.0 && v < 1.0));

        // bias-corrected noiseless point gives zero metric on its label
        let eq = EqualizedBlock {
            r: ComplexMatrix::from_fn(2, 8, |s, k| qam.point(labels[k * 2 + s]) * w[s]),
            params: StreamParams::Mmse { w: w.clone() },
        };
        let table = mmse_metrics(&eq, &qam).unwrap();
        for k in 0..8 {
            for s in 0..2 {
                let label = labels[k * 2 + s];
                for i in 0..4 {
                    let b = crate::bicm::qam::label_bit(label, i) as u8;
                    assert!(table.get(k, s, i, b) < 1e-20);
                }
            }
        }

        let bad = EqualizedBlock {
            r: ComplexMatrix::zeros(2, 1),
            params: StreamParams::Mmse { w: vec![1.0, 0.5] },
        };
        assert!(mmse_metrics(&bad, &qam).is_err());
        assert!(mmse_equalize(&h, &v_l, 0.0, &y2).is_err());
    }

    #[test]
    fn perfect_csit_equivalences() {
        let mut r = rng(4);
        let qam = Qam16::new();
        for &(m, n) in &[(2, 2), (3, 2)] {
            let h = gaussian_matrix(&mut r, m, n);
            let t = svd_ordered(&h).unwrap().truncate(2).unwrap();
            let sigma2 = 2.0 / 10f64.powf(1.5);
            let (x, _) = symbols(&mut r, &qam, 2, 50);
            let y = &h * &t.v * &x + noise(&mut r, m, 50, sigma2);
            let base = perfect_csit_metrics(&perfect_csit_equalize(&t, &y).unwrap(), &qam).unwrap();
            let zf = zf_metrics(&zf_equalize(&h, &t.v, &y).unwrap(), &qam).unwrap();
            let mmse = mmse_metrics(&mmse_equalize(&h, &t.v, sigma2, &y).unwrap(), &qam).unwrap();
            let (gain, var) = svd_receiver_params(&t, &t.v, &PhaseVector::zeros(2), sigma2).unwrap();
            let svd = svd_receiver_metrics(
                &svd_receiver_equalize(&t, &PhaseVector::zeros(2), (gain, var), &y).unwrap(),
                &qam,
            )
            .unwrap();
            for (((b, z), mm), sv) in base.values().iter().zip(zf.values()).zip(mmse.values()).zip(svd.values()) {
                for bit in 0..2 {
                    assert!(rel_close(b[bit], z[bit], 1e-9));
                    assert!(rel_close(b[bit], sigma2 * mm[bit], 1e-9));
                    assert!(rel_close(b[bit], sigma2 * sv[bit], 1e-9));
                }
            }
        }
    }

    #[test]
    fn noiseless_perfect_csit_diagonalizes() {
        let mut r = rng(5);
        let qam = Qam16::new();
        let h = gaussian_matrix(&mut r, 2, 2);
        let t = svd_ordered(&h).unwrap().truncate(2).unwrap();
        let (x, labels) = symbols(&mut r, &qam, 2, 6);
        let y = &h * &t.v * &x;
        let eq = svd_receiver_equalize(&t, &PhaseVector::zeros(2), (t.sigma.clone(), vec![1.0; 2]), &y).unwrap();
        for k in 0..6 {
            for s in 0..2 {
                assert!((eq.r[(s, k)] - x[(s, k)] * t.sigma[s]).norm() < 1e-12);
            }
        }
        let table = perfect_csit_metrics(&perfect_csit_equalize(&t, &y).unwrap(), &qam).unwrap();
        for k in 0..6 {
            for s in 0..2 {
                for i in 0..4 {
                    let b = crate::bicm::qam::label_bit(labels[k * 2 + s], i) as u8;
                    assert!(table.get(k, s, i, b) < 1e-20);
                }
            }
        }
    }

    #[test]
    fn svd_params_degenerate_and_invariant() {
        let mut r = rng(6);
        let h = gaussian_matrix(&mut r, 2, 2);
        let t = svd_ordered(&h).unwrap().truncate(2).unwrap();
        let (g, v) = svd_receiver_params(&t, &t.v, &PhaseVector::zeros(2), 0.1).unwrap();
        for s in 0..2 {
            assert!(rel_close(g[s], t.sigma[s], 1e-12));
            assert!(rel_close(v[s], 0.1, 1e-12));
        }
        let d = PhaseVector::new([r.random::<f64>() * TAU, r.random::<f64>() * TAU]);
        let vd = apply_phases(&t.v, &d).unwrap();
        let (g2, v2) = svd_receiver_params(&t, &vd, &d, 0.1).unwrap();
        for s in 0..2 {
            assert!(rel_close(g2[s], g[s], 1e-12) && rel_close(v2[s], v[s], 1e-12));
        }
        assert!(svd_receiver_params(&t, &ComplexMatrix::zeros(3, 2), &d, 0.1).is_err());
    }

    #[test]
    fn svd_receiver_noise_is_white() {
        let mut r = rng(7);
        let h = gaussian_matrix(&mut r, 2, 2);
        let t = svd_ordered(&h).unwrap().truncate(2).unwrap();
        let sigma2 = 0.5;
        let samples = 100_000;
        let n = noise(&mut r, 2, samples, sigma2);
        let phases = PhaseVector::new([1.0, 2.5]);
        let eq = svd_receiver_equalize(&t, &phases, (vec![1.0; 2], vec![1.0; 2]), &n).unwrap();
        let cov = &eq.r * eq.r.adjoint() / Complex64::new(samples as f64, 0.0);
        let in_cov = &n * n.adjoint() / Complex64::new(samples as f64, 0.0);
        for s in 0..2 {
            assert!((cov[(s, s)].re - sigma2).abs() < 0.02 * sigma2);
            assert!((in_cov[(s, s)].re - sigma2).abs() < 0.02 * sigma2);
        }
        assert!(cov[(0, 1)].norm() < 0.02 * sigma2);
    }

    #[test]
    fn svd_receiver_signal_decomposition() {
        let mut r = rng(8);
        let qam = Qam16::new();
        let h = gaussian_matrix(&mut r, 3, 2);
        let t = svd_ordered(&h).unwrap().truncate(2).unwrap();
        let v_l = random_orthonormal(&mut r, 2, 2);
        let phases = optimal_phases(&t.v, &v_l).unwrap();
        let sigma2 = 0.1;
        let params = svd_receiver_params(&t, &v_l, &phases, sigma2).unwrap();
        let (x, _) = symbols(&mut r, &qam, 2, 30);
        let n = noise(&mut r, 3, 30, sigma2);
        let y = &h * &v_l * &x + &n;
        let eq = svd_receiver_equalize(&t, &phases, params.clone(), &y).unwrap();
        let ph: Vec<Complex64> = phases.phasors().collect();
        for k in 0..30 {
            for s in 0..2 {
                let vs = t.v.column(s);
                let us = t.u.column(s);
                let mut expected = Complex64::new(0.0, 0.0);
                for i in 0..2 {
                    if i != s {
                        expected += ph[s].conj() * t.sigma[s] * vs.dotc(&v_l.column(i)) * x[(i, k)];
                    }
                }
                expected += ph[s].conj() * us.dotc(&n.column(k));
                let residual = eq.r[(s, k)] - x[(s, k)] * params.0[s];
                assert!((residual - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_receiver_variance_matches_monte_carlo() {
        let mut r = rng(9);
        let qam = Qam16::new();
        let h = gaussian_matrix(&mut r, 2, 2);
        let t = svd_ordered(&h).unwrap().truncate(2).unwrap();
        let v_l = crate::linalg::closest_unitary(&(&t.v + gaussian_matrix(&mut r, 2, 2) * Complex64::new(0.3, 0.0))).unwrap();
        let phases = optimal_phases(&t.v, &v_l).unwrap();
        let sigma2 = 2.0 / 10f64.powf(1.5);
        let (gain, var) = svd_receiver_params(&t, &v_l, &phases, sigma2).unwrap();
        let samples = 100_000;
        let (x, _) = symbols(&mut r, &qam, 2, samples);
        let y = &h * &v_l * &x + noise(&mut r, 2, samples, sigma2);
        let eq = svd_receiver_equalize(&t, &phases, (gain.clone(), var.clone()), &y).unwrap();
        for s in 0..2 {
            let emp: f64 = (0..samples)
                .map(|k| (eq.r[(s, k)] - x[(s, k)] * gain[s]).norm_sqr())
                .sum::<f64>()
                / samples as f64;
            assert!((emp - var[s]).abs() < 0.03 * var[s], "stream {s}: {emp} vs {}", var[s]);
        }
    }

    #[test]
    fn wrong_params_are_rejected() {
        let qam = Qam16::new();
        let eq = EqualizedBlock {
            r: ComplexMatrix::zeros(2, 1),
            params: StreamParams::Perfect { lambda: vec![1.0, 1.0] },
        };
        assert!(zf_metrics(&eq, &qam).is_err());
        assert!(svd_receiver_metrics(&eq, &qam).is_err());
        assert!(perfect_csit_metrics(&eq, &qam).is_ok());
        assert!(bit_metrics(&eq, &qam).is_ok());
    }
}
