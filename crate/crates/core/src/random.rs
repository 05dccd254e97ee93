//! Random complex matrices used for channels, codebooks and tests.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{closest_unitary, ComplexMatrix};

/// One CN(0,1) sample: independent real and imaginary parts with variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows × cols` matrix of i.i.d. CN(0,1) entries, drawn in row-major order.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::from_row_slice(rows, cols, &data)
}

/// Closest orthonormal-column projection of a Gaussian matrix.
///
/// Redraws in the (probability zero) event of a rank-deficient draw.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(cols <= rows && cols > 0, "need 1 <= cols <= rows");
    loop {
        if let Ok(q) = closest_unitary(&gaussian_matrix(rng, rows, cols)) {
            return q;
        }
    }
}
