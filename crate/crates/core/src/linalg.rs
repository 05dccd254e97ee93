//! Complex matrix primitives: ordered SVD with a fixed phase convention,
//! diagonal phase rotations, Frobenius distances and the closest matrix with
//! orthonormal columns.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{param, Error, Result};

/// Dense complex matrix. Channels are M×N, precoders N×S.
pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Singular values at or below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-12;

/// `H = U diag(sigma) V^H` with singular values in descending order.
///
/// Each pair `(u_k, v_k)` is rotated so that the largest-magnitude entry of
/// `v_k` is real and positive (first such entry on ties), which pins down the
/// otherwise free per-column phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdTriple {
    /// Number of retained singular triplets.
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Keeps the `s` leading singular triplets.
    pub fn truncate(&self, s: usize) -> Result<SvdTriple> {
        if s == 0 || s > self.rank() {
            return param(format!("stream count {s} outside 1..={}", self.rank()));
        }
        Ok(SvdTriple {
            u: self.u.columns(0, s).into_owned(),
            sigma: self.sigma[..s].to_vec(),
            v: self.v.columns(0, s).into_owned(),
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (k, &s) in self.sigma.iter().enumerate() {
            us.column_mut(k).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

/// Ordered, phase-canonical thin SVD.
pub fn svd_ordered(h: &ComplexMatrix) -> Result<SvdTriple> {
    let (rows, cols) = h.shape();
    if rows == 0 || cols == 0 {
        return param("matrix must have at least one row and one column");
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return param("matrix has non-finite entries");
    }
    let svd = nalgebra::SVD::try_new(h.clone(), true, true, f64::EPSILON, 10_000)
        .ok_or(Error::Decomposition { rows, cols })?;
    let (u, v_h) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_h)) => (u, v_h),
        _ => return Err(Error::Decomposition { rows, cols }),
    };
    let v = v_h.adjoint();
    let q = svd.singular_values.len();

    let mut order: Vec<usize> = (0..q).collect();
    // stable: equal values keep decomposition order
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut out_u = ComplexMatrix::zeros(rows, q);
    let mut out_v = ComplexMatrix::zeros(cols, q);
    let mut sigma = Vec::with_capacity(q);
    for (dst, &src) in order.iter().enumerate() {
        let vcol = v.column(src);
        let rot = canonical_rotation(vcol.iter());
        out_v.set_column(dst, &(vcol * rot));
        out_u.set_column(dst, &(u.column(src) * rot));
        sigma.push(svd.singular_values[src].max(0.0));
    }
    Ok(SvdTriple {
        u: out_u,
        sigma,
        v: out_v,
    })
}

/// Unit-modulus factor that makes the largest-magnitude entry real positive.
pub(crate) fn canonical_rotation<'a>(entries: impl Iterator<Item = &'a Complex64>) -> Complex64 {
    let mut best = Complex64::new(0.0, 0.0);
    let mut best_mag = 0.0;
    for z in entries {
        let m = z.norm();
        if m > best_mag {
            best_mag = m;
            best = *z;
        }
    }
    if best_mag == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        best.conj() / best_mag
    }
}

/// Per-stream phase angles θ_k, each normalized into `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(theta: impl IntoIterator<Item = f64>) -> Self {
        PhaseVector(theta.into_iter().map(wrap_angle).collect())
    }

    pub fn zeros(s: usize) -> Self {
        PhaseVector(vec![0.0; s])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    /// `e^{jθ_k}` for each stream.
    pub fn phasors(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.0.iter().map(|&t| Complex64::from_polar(1.0, t))
    }

    /// Element-wise sum modulo 2π.
    pub fn compose(&self, other: &PhaseVector) -> PhaseVector {
        PhaseVector::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b))
    }
}

fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Multiplies column k of `v` by `e^{jθ_k}`.
pub fn apply_phases(v: &ComplexMatrix, p: &PhaseVector) -> Result<ComplexMatrix> {
    if v.ncols() != p.len() {
        return param(format!(
            "{} phases for a matrix with {} columns",
            p.len(),
            v.ncols()
        ));
    }
    let mut out = v.clone();
    for (k, ph) in p.phasors().enumerate() {
        out.column_mut(k).scale_mut_complex(ph);
    }
    Ok(out)
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, a: Complex64);
}

impl<S> ScaleComplex for nalgebra::Matrix<Complex64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<Complex64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, a: Complex64) {
        for z in self.iter_mut() {
            *z *= a;
        }
    }
}

/// `Σ |a_ij − b_ij|²`.
pub fn frob_dist_sq(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return param(format!(
            "shape mismatch {:?} vs {:?}",
            a.shape(),
            b.shape()
        ));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum())
}

/// Nearest matrix with orthonormal columns in Frobenius norm: `Ũ W̃^H` for
/// `E = Ũ Σ̃ W̃^H`.
pub fn closest_unitary(e: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (rows, cols) = e.shape();
    if cols > rows {
        return Err(Error::Rank(format!(
            "{rows}x{cols} matrix cannot have orthonormal columns"
        )));
    }
    let t = svd_ordered(e)?;
    let smax = t.sigma.first().copied().unwrap_or(0.0);
    let smin = t.sigma.last().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= RANK_TOL * smax {
        return Err(Error::Rank(format!(
            "{rows}x{cols} matrix has singular values {:?}",
            t.sigma
        )));
    }
    Ok(&t.u * t.v.adjoint())
}

/// `‖A^H A − I‖_F`.
pub fn orthonormality_defect(a: &ComplexMatrix) -> f64 {
    let g = a.adjoint() * a;
    let n = g.nrows();
    (g - ComplexMatrix::identity(n, n)).norm()
}

/// Dominant eigenvector of a Hermitian positive semidefinite matrix by power
/// iteration, phase-canonicalized like [`svd_ordered`] columns.
///
/// Starts from `e_1`, falling back to the next basis vector while the start
/// vector is annihilated. Stops once `‖Rx − (x^H R x) x‖ ≤ 1e-10` or after
/// 10 000 steps.
pub fn principal_eigenvector(r: &ComplexMatrix) -> Result<ComplexVector> {
    const TOL: f64 = 1e-10;
    const MAX_STEPS: usize = 10_000;
    let n = r.nrows();
    if n == 0 || r.ncols() != n {
        return param("principal eigenvector needs a non-empty square matrix");
    }
    let scale = r.norm();
    if scale == 0.0 {
        return Err(Error::Rank("zero correlation matrix".into()));
    }

    let mut x = None;
    for j in 0..n {
        let mut e = ComplexVector::zeros(n);
        e[j] = Complex64::new(1.0, 0.0);
        let y = r * &e;
        if y.norm() > 1e-12 * scale {
            x = Some(y.unscale(y.norm()));
            break;
        }
    }
    let mut x = x.ok_or_else(|| Error::Rank("no start vector excites the matrix".into()))?;

    for _ in 0..MAX_STEPS {
        let y = r * &x;
        let rayleigh = x.dotc(&y);
        let residual = (&y - &x * rayleigh).norm();
        let ny = y.norm();
        if ny == 0.0 {
            break;
        }
        x = y.unscale(ny);
        if residual <= TOL * scale.max(1.0) {
            break;
        }
    }
    let rot = canonical_rotation(x.iter());
    Ok(x * rot)
}
