//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "spectral norm of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    Ok(sv.max())
}

/// Largest entrywise deviation `|m_ij - conj(m_ji)|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition `m = U diag(w) U†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let eig = SymmetricEigen::new(m.clone());
        HermitianEigen {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    /// `U diag(f(w)) U†`.
    pub fn map<F: Fn(f64) -> Complex64>(&self, f: F) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &w) in self.values.iter().enumerate() {
            let fw = f(w);
            for v in scaled.column_mut(j).iter_mut() {
                *v *= fw;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn pow(&self, k: u32) -> CMatrix {
        self.map(|w| Complex64::new(w.powi(k as i32), 0.0))
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Compensated (Neumaier) summation of complex numbers.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: Complex64,
    comp: Complex64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: Complex64) {
        self.sum.re = neumaier_step(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = neumaier_step(self.sum.im, x.im, &mut self.comp.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn neumaier_step(sum: f64, x: f64, comp: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}

impl FromIterator<Complex64> for KahanSum {
    fn from_iter<It: IntoIterator<Item = Complex64>>(iter: It) -> Self {
        let mut k = KahanSum::new();
        for x in iter {
            k.add(x);
        }
        k
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub fn factorial_u128(k: usize) -> u128 {
    (1..=k as u128).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let m = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (&m + m.adjoint()).scale(0.5)
    }

    #[test]
    fn spectral_norm_of_pauli_and_scaled_identity() {
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        assert!((spectral_norm(&x).unwrap() - 1.0).abs() < 1e-12);
        let two = identity(4).scale(2.0);
        assert!((spectral_norm(&two).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_matches_largest_eigenvalue_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let h = random_hermitian(8, &mut rng);
            let eig = HermitianEigen::new(&h);
            let expected = eig.values.iter().fold(0.0f64, |a, w| a.max(w.abs()));
            let got = spectral_norm(&h).unwrap();
            assert!((got - expected).abs() <= 1e-9 * expected);
        }
    }

    #[test]
    fn spectral_norm_rejects_rectangular() {
        assert!(spectral_norm(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn eigen_reconstructs_and_powers_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_hermitian(6, &mut rng);
        let eig = HermitianEigen::new(&h);
        assert!(max_abs_diff(&eig.pow(1), &h) < 1e-12);
        assert!(max_abs_diff(&eig.pow(3), &(&h * &h * &h)) < 1e-11);
        let u = &eig.vectors;
        assert!(max_abs_diff(&(u.adjoint() * u), &identity(6)) < 1e-12);
    }

    #[test]
    fn kahan_recovers_cancelled_small_terms() {
        let mut k = KahanSum::new();
        k.add(c(1e16, 0.0));
        for _ in 0..10 {
            k.add(c(1.0, 1.0));
        }
        k.add(c(-1e16, 0.0));
        assert_eq!(k.value(), c(10.0, 10.0));
    }

    #[test]
    fn trace_product_matches_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(5, &mut rng);
        let b = random_hermitian(5, &mut rng);
        assert!((trace_product(&a, &b) - trace(&(&a * &b))).norm() < 1e-12);
    }

    #[test]
    fn combinatorial_helpers() {
        assert_eq!(factorial(5), 120.0);
        assert_eq!(factorial_u128(0), 1);
        assert_eq!(binomial(6, 2), 15.0);
        assert_eq!(binomial(2, 3), 0.0);
    }
}
