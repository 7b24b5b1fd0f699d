//! Dense Hermitian positive-definite factorization for the normal equations.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix,
/// stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<Complex64>,
}

impl Cholesky {
    /// Factors the row-major `dim × dim` matrix `a`. Returns `None` when a
    /// pivot is not strictly positive relative to `pivot_floor`.
    pub fn factor(a: &[Complex64], dim: usize, pivot_floor: f64) -> Option<Self> {
        debug_assert_eq!(a.len(), dim * dim);
        let mut l = vec![Complex64::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            let mut diag = a[j * dim + j].re;
            for k in 0..j {
                diag -= l[j * dim + k].norm_sqr();
            }
            if diag.is_nan() || diag <= pivot_floor {
                return None;
            }
            let pivot = libm::sqrt(diag);
            l[j * dim + j] = Complex64::new(pivot, 0.0);
            for i in j + 1..dim {
                let mut s = a[i * dim + j];
                for k in 0..j {
                    s -= l[i * dim + k] * l[j * dim + k].conj();
                }
                l[i * dim + j] = s / pivot;
            }
        }
        Some(Self { dim, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [Complex64]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let s = b[i] - row.iter().zip(&b[..i]).map(|(l, x)| l * x).sum::<Complex64>();
            b[i] = s / self.lower[i * n + i].re;
        }
    }

    /// Solves `Lᴴ x = y` in place.
    pub fn backward(&self, b: &mut [Complex64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let s = b[i]
                - (i + 1..n)
                    .zip(&b[i + 1..])
                    .map(|(k, x)| self.lower[k * n + i].conj() * x)
                    .sum::<Complex64>();
            b[i] = s / self.lower[i * n + i].re;
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        self.forward(b);
        self.backward(b);
    }
}

/// y = A x for row-major square A.
pub fn matvec(a: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            a[i * n..(i + 1) * n]
                .iter()
                .zip(x)
                .map(|(aij, xj)| aij * xj)
                .sum()
        })
        .collect()
}

pub fn norm(x: &[Complex64]) -> f64 {
    libm::sqrt(x.iter().map(Complex64::norm_sqr).sum())
}

/// xᴴ y.
pub fn dot_conj(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}
