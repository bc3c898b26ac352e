//! Shared generators for the randomized suites: planted-structure PSD
//! matrices, orthogonal factors, and vectors with controlled range
//! membership. Seeded ChaCha keeps every run reproducible.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| rng.random_range(lo..hi)))
}

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let v = random_vector(rng, n, -1.0, 1.0);
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

/// Random orthogonal matrix from the QR factorization of a random square
/// matrix (resampled if nearly singular).
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    loop {
        let raw = Matrix::from_iterator(n, n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)));
        if raw.clone().lu().determinant().abs() < 1e-6 {
            continue;
        }
        return raw.qr().q();
    }
}

/// PSD matrix with an exactly planted rank: `M = Q diag(e) Q'` with `rank`
/// eigenvalues in [0.4, 3] and the rest zero. Returns `(M, Q)`; the trailing
/// columns of `Q` span `N(M)`.
pub fn planted_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> (Matrix, Matrix) {
    assert!(rank <= n);
    let q = random_orthogonal(rng, n);
    let mut eigs = Vector::zeros(n);
    for i in 0..rank {
        eigs[i] = rng.random_range(0.4..3.0);
    }
    let m = &q * Matrix::from_diagonal(&eigs) * q.transpose();
    (((&m + m.transpose()) * 0.5), q)
}

/// A vector guaranteed to lie in `R(M)` (as `M y`).
pub fn vector_in_range(rng: &mut ChaCha8Rng, m: &Matrix) -> Vector {
    m * random_vector(rng, m.ncols(), -1.5, 1.5)
}

/// A vector with a guaranteed component outside `R(M)`, built from the
/// planted null basis (trailing columns of `Q`).
pub fn vector_out_of_range(rng: &mut ChaCha8Rng, m: &Matrix, q: &Matrix, rank: usize) -> Vector {
    let n = m.ncols();
    assert!(rank < n);
    let mut k = vector_in_range(rng, m);
    let mut null_part = Vector::zeros(n);
    for j in rank..n {
        null_part += q.column(j) * rng.random_range(0.3..1.5) * (if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    }
    k += null_part;
    k
}

/// Random full-row-rank matrix (resampled until the rank is numerically
/// clean).
pub fn random_full_row_rank(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    assert!(m <= n);
    loop {
        let a = Matrix::from_iterator(m, n, (0..m * n).map(|_| rng.random_range(-1.5..1.5)));
        let svd = a.clone().svd(false, false);
        let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let min = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
        if min > 1e-3 * max.max(1.0) {
            return a;
        }
    }
}

/// Brute-force orthonormal basis of the column space via classical
/// Gram-Schmidt with re-orthogonalization; independent of the spectral path.
pub fn gram_schmidt_basis(columns: &Matrix, tol: f64) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    for j in 0..columns.ncols() {
        let mut v = columns.column(j).into_owned();
        for _ in 0..2 {
            for b in &basis {
                let coeff = b.dot(&v);
                v -= b * coeff;
            }
        }
        let norm = v.norm();
        if norm > tol {
            basis.push(v / norm);
        }
    }
    basis
}

/// Projector onto the span of the given orthonormal basis.
pub fn projector(basis: &[Vector], n: usize) -> Matrix {
    let mut p = Matrix::zeros(n, n);
    for b in basis {
        p += b * b.transpose();
    }
    p
}
