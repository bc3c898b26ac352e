//! Rank-revealing decomposition of symmetric PSD matrices and the operators
//! derived from it: pseudoinverse, pseudoinverse square root, range/null
//! projections, Householder orthogonal complements, and null-space bases of
//! full-row-rank matrices.
//!
//! Everything downstream (CQE classification, the QP solvers, the
//! Hamilton-Jacobi bridges) is built on [`SpectralData`].

use crate::{Matrix, Vector};
use thiserror::Error;

/// Errors from the decomposition and basis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: asymmetry {asymmetry:.3e} exceeds {tol:.3e}")]
    NotSymmetric { asymmetry: f64, tol: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.6e} below -{tol:.3e}")]
    NotPositiveSemidefinite { eigenvalue: f64, tol: f64 },
    #[error("non-finite entry encountered")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector is not unit length: |norm - 1| = {deviation:.3e}")]
    NotUnitLength { deviation: f64 },
    #[error("matrix does not have full row rank: rank {rank} < {rows} rows")]
    RankDeficientRows { rank: usize, rows: usize },
    #[error("matrix has full column rank; no null space to build a basis for")]
    FullColumnRank,
}

/// Rank truncation policy for [`spectral_decompose`].
///
/// An eigenvalue `σ_i` is kept iff `σ_i > threshold`, with the threshold
/// derived from the largest eigenvalue `σ_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankPolicy {
    /// `n · ε_machine · σ_max`, the standard rank-revealing choice.
    Default,
    /// `factor · σ_max`.
    Relative(f64),
    /// A fixed absolute threshold.
    Absolute(f64),
}

impl RankPolicy {
    /// Absolute truncation threshold for a matrix of size `n` whose largest
    /// eigenvalue/singular value is `sigma_max`.
    pub fn threshold(&self, n: usize, sigma_max: f64) -> f64 {
        match *self {
            RankPolicy::Default => n as f64 * f64::EPSILON * sigma_max,
            RankPolicy::Relative(factor) => factor * sigma_max,
            RankPolicy::Absolute(abs) => abs,
        }
    }
}

/// Rank-revealing symmetric eigendecomposition of a PSD matrix
/// `M = U1 · diag(sigma1) · U1'`.
///
/// `u1` spans the range of `M`, `u2` its null space; `sigma1` holds the `rank`
/// positive eigenvalues in non-increasing order. `rank_tol` records the
/// absolute threshold below which eigenvalues were truncated to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub dim: usize,
    pub rank: usize,
    pub sigma1: Vec<f64>,
    pub u1: Matrix,
    pub u2: Matrix,
    pub rank_tol: f64,
}

impl SpectralData {
    /// Reconstruct `U1 · diag(sigma1) · U1'`.
    pub fn reconstruct(&self) -> Matrix {
        let sigma = Matrix::from_diagonal(&Vector::from_row_slice(&self.sigma1));
        &self.u1 * sigma * self.u1.transpose()
    }

    /// Orthogonal projection of `v` onto the range of `M` (`U1 U1' v`).
    pub fn project_range(&self, v: &Vector) -> Vector {
        &self.u1 * (self.u1.transpose() * v)
    }

    /// Orthogonal projection of `v` onto the null space of `M` (`U2 U2' v`).
    pub fn project_null(&self, v: &Vector) -> Vector {
        &self.u2 * (self.u2.transpose() * v)
    }

    /// `M† v` without forming the pseudoinverse.
    pub fn apply_pinv(&self, v: &Vector) -> Vector {
        let mut coords = self.u1.transpose() * v;
        for (i, s) in self.sigma1.iter().enumerate() {
            coords[i] /= s;
        }
        &self.u1 * coords
    }

    /// `M v` through the decomposition.
    pub fn apply(&self, v: &Vector) -> Vector {
        let mut coords = self.u1.transpose() * v;
        for (i, s) in self.sigma1.iter().enumerate() {
            coords[i] *= s;
        }
        &self.u1 * coords
    }

    /// `M^{1/2}` (only meaningful on the range; zero on the null space).
    pub fn sqrt(&self) -> Matrix {
        self.scaled_range_operator(|s| s.sqrt())
    }

    fn scaled_range_operator(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let scaled = Matrix::from_diagonal(&Vector::from_iterator(
            self.rank,
            self.sigma1.iter().map(|&s| f(s)),
        ));
        &self.u1 * scaled * self.u1.transpose()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim
    }
}

/// Orthogonal decomposition of a vector against a range space:
/// `k = k_M + k_{M⊥}` with `k_M ∈ R(M)` and `k_{M⊥} ∈ R(M)⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeSplit {
    pub in_range: Vector,
    pub out_of_range: Vector,
    pub out_norm: f64,
}

fn check_finite_matrix(m: &Matrix) -> Result<(), LinalgError> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

fn check_finite_vector(v: &Vector) -> Result<(), LinalgError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

/// Flip column signs so that the first entry of magnitude above 1e-12 in each
/// column is positive. Makes repeated decompositions of the same input
/// bit-identical in serialized output.
fn canonicalize_columns(m: &mut Matrix) {
    for mut col in m.column_iter_mut() {
        if let Some(lead) = col.iter().find(|x| x.abs() > 1e-12) {
            if *lead < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Rank-revealing eigendecomposition of a symmetric PSD matrix.
///
/// The input is symmetrized as `(M + M')/2` when its asymmetry is within
/// `1e-10` relative; larger asymmetry is an error. Eigenvalues at or below the
/// policy threshold are truncated to rank deficiency, and an eigenvalue below
/// the negated threshold fails the PSD check. Eigenvector columns are
/// sign-canonicalized.
pub fn spectral_decompose(m: &Matrix, policy: RankPolicy) -> Result<SpectralData, LinalgError> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(LinalgError::EmptyMatrix);
    }
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    check_finite_matrix(m)?;
    let n = m.nrows();

    let scale = m.norm().max(1.0);
    let asymmetry = (m - m.transpose()).norm();
    let sym_tol = 1e-10 * scale;
    if asymmetry > sym_tol {
        return Err(LinalgError::NotSymmetric {
            asymmetry: asymmetry / scale,
            tol: 1e-10,
        });
    }
    let symmetrized = (m + m.transpose()) * 0.5;

    let eig = symmetrized.symmetric_eigen();

    // Sort eigenpairs by eigenvalue, non-increasing.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let sigma_max = eig.eigenvalues[order[0]].max(0.0);
    let tol = policy.threshold(n, sigma_max);

    let min_eig = eig.eigenvalues[order[n - 1]];
    if min_eig < -tol {
        return Err(LinalgError::NotPositiveSemidefinite {
            eigenvalue: min_eig,
            tol,
        });
    }

    let rank = order
        .iter()
        .take_while(|&&i| eig.eigenvalues[i] > tol)
        .count();

    let sigma1: Vec<f64> = order[..rank].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut u1 = Matrix::zeros(n, rank);
    for (dst, &src) in order[..rank].iter().enumerate() {
        u1.set_column(dst, &eig.eigenvectors.column(src));
    }
    let mut u2 = Matrix::zeros(n, n - rank);
    for (dst, &src) in order[rank..].iter().enumerate() {
        u2.set_column(dst, &eig.eigenvectors.column(src));
    }
    canonicalize_columns(&mut u1);
    canonicalize_columns(&mut u2);

    Ok(SpectralData {
        dim: n,
        rank,
        sigma1,
        u1,
        u2,
        rank_tol: tol,
    })
}

/// Moore-Penrose pseudoinverse `M† = U1 Σ1⁻¹ U1'`.
pub fn pseudoinverse(sd: &SpectralData) -> Matrix {
    sd.scaled_range_operator(|s| 1.0 / s)
}

/// Pseudoinverse square root `M^{†/2} = U1 Σ1^{-1/2} U1'`, the unique PSD
/// matrix whose square is `M†`.
pub fn pinv_sqrt(sd: &SpectralData) -> Matrix {
    sd.scaled_range_operator(|s| 1.0 / s.sqrt())
}

/// Decompose `k = k_M + k_{M⊥}` against the range of the decomposed matrix.
pub fn range_split(k: &Vector, sd: &SpectralData) -> Result<RangeSplit, LinalgError> {
    check_finite_vector(k)?;
    if k.len() != sd.dim {
        return Err(LinalgError::DimensionMismatch {
            expected: sd.dim,
            got: k.len(),
        });
    }
    let in_range = sd.project_range(k);
    let out_of_range = sd.project_null(k);
    let out_norm = out_of_range.norm();
    Ok(RangeSplit {
        in_range,
        out_of_range,
        out_norm,
    })
}

/// Is `k ∈ R(M)`? True iff `‖U2 U2' k‖ ≤ tol · max(1, ‖k‖)`.
pub fn in_range(k: &Vector, sd: &SpectralData, membership_tol: f64) -> Result<bool, LinalgError> {
    let split = range_split(k, sd)?;
    Ok(split.out_norm <= membership_tol * k.norm().max(1.0))
}

/// Orthogonal complement of a unit vector as an `(n-1) × n` matrix with
/// orthonormal rows: `ξ⊥ ξ = 0` and `[ξ | ξ⊥']` orthogonal.
///
/// Built from the Householder reflection `H_ι = I - 2ιι'` with
/// `ι = (ξ - e1)/‖ξ - e1‖` (identity when `ξ = e1`), taking the last `n-1`
/// columns of `H_ι`. This costs O(n²) against the O(n³) of an SVD route.
pub fn householder_complement(xi: &Vector) -> Result<Matrix, LinalgError> {
    check_finite_vector(xi)?;
    let n = xi.len();
    if n == 0 {
        return Err(LinalgError::EmptyMatrix);
    }
    let deviation = (xi.norm() - 1.0).abs();
    if deviation > 1e-10 {
        return Err(LinalgError::NotUnitLength { deviation });
    }
    let xi = xi / xi.norm();

    let mut shifted = xi.clone();
    shifted[0] -= 1.0;
    let shift_norm = shifted.norm();

    let mut perp = Matrix::zeros(n - 1, n);
    if shift_norm == 0.0 {
        // ξ = e1: H is the identity, the complement is [e2, ..., en]'.
        for i in 0..n - 1 {
            perp[(i, i + 1)] = 1.0;
        }
        return Ok(perp);
    }
    let iota = shifted / shift_norm;
    // Row i of the complement is column i+1 of H = I - 2ιι'.
    for i in 0..n - 1 {
        for j in 0..n {
            let identity = if j == i + 1 { 1.0 } else { 0.0 };
            perp[(i, j)] = identity - 2.0 * iota[j] * iota[i + 1];
        }
    }
    Ok(perp)
}

/// Null-space basis `V2` (with `R(V2) = N(A)`, orthonormal columns) and the
/// pseudoinverse `A†` of a full-row-rank `m × n` matrix with `m < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullspaceBasis {
    /// `n × (n-m)`, orthonormal columns spanning `N(A)`.
    pub v2: Matrix,
    /// `n × m`; for full row rank, `A A† = I`.
    pub pinv: Matrix,
    pub rank: usize,
}

/// Compute `V2` and `A†` for a full-row-rank underdetermined matrix.
///
/// The right singular subspace is taken from the SVD of `A`; the null-space
/// basis is then read off the eigendecomposition of the projector
/// `I - V1 V1'`, whose unit eigenvalues are perfectly separated, and
/// sign-canonicalized like [`spectral_decompose`].
pub fn nullspace_basis(a: &Matrix, policy: RankPolicy) -> Result<NullspaceBasis, LinalgError> {
    check_finite_matrix(a)?;
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Err(LinalgError::EmptyMatrix);
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = policy.threshold(m.max(n), sigma_max);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < m {
        return Err(LinalgError::RankDeficientRows { rank, rows: m });
    }
    if m == n {
        return Err(LinalgError::FullColumnRank);
    }

    let u = svd.u.as_ref().expect("SVD computed with u");
    let v_t = svd.v_t.as_ref().expect("SVD computed with v_t");

    // A† = V1 Γ1⁻¹ W' assembled column-index-wise so singular-value ordering
    // does not matter.
    let mut pinv = Matrix::zeros(n, m);
    for i in 0..m {
        let s = svd.singular_values[i];
        if s > tol {
            let vi = v_t.row(i).transpose();
            let wi = u.column(i);
            pinv += vi * wi.transpose() / s;
        }
    }

    // Projector onto N(A) = I - V1 V1'.
    let v1 = v_t.transpose();
    let projector = Matrix::identity(n, n) - &v1 * v1.transpose();
    let proj_sd = spectral_decompose(&projector, RankPolicy::Relative(0.5))?;
    debug_assert_eq!(proj_sd.rank, n - m);
    Ok(NullspaceBasis {
        v2: proj_sd.u1,
        pinv,
        rank,
    })
}

/// Least-squares solve `min ‖A x - b‖` through a truncated SVD.
///
/// Returns the minimum-norm solution, the residual norm, and the numerical
/// rank of `A`. Used for the consistency test `b ∈ R(A)` and for vertex
/// solves on stacked constraint systems.
pub fn lstsq(a: &Matrix, b: &Vector, policy: RankPolicy) -> Result<(Vector, f64, usize), LinalgError> {
    check_finite_matrix(a)?;
    check_finite_vector(b)?;
    if a.nrows() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let (m, n) = (a.nrows(), a.ncols());
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = policy.threshold(m.max(n), sigma_max);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();

    let u = svd.u.as_ref().expect("SVD computed with u");
    let v_t = svd.v_t.as_ref().expect("SVD computed with v_t");
    let mut x = Vector::zeros(n);
    for i in 0..svd.singular_values.len() {
        let s = svd.singular_values[i];
        if s > tol {
            let coeff = u.column(i).dot(b) / s;
            x += v_t.row(i).transpose() * coeff;
        }
    }
    let residual = (a * &x - b).norm();
    Ok((x, residual, rank))
}

/// Numerical rank of an arbitrary matrix under the given policy.
pub fn matrix_rank(a: &Matrix, policy: RankPolicy) -> Result<usize, LinalgError> {
    check_finite_matrix(a)?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0);
    }
    let svd = a.clone().svd(false, false);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = policy.threshold(a.nrows().max(a.ncols()), sigma_max);
    Ok(svd.singular_values.iter().filter(|&&s| s > tol).count())
}
