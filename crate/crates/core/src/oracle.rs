//! Independent brute-force oracles for verifying the closed-form solvers:
//! exhaustive grid minimization, classical scalar quadratic roots, and
//! null-space intersection dimension. None of them go through the spectral
//! machinery that the closed forms use.

use crate::qp::CqfSpec;
use crate::{Matrix, Vector};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grid spans {points:.3e} points, above the 1e8 guard")]
    GridTooLarge { points: f64 },
    #[error("grid dimension {n} exceeds the cost guard of 4")]
    DimensionTooLarge { n: usize },
    #[error("no grid point satisfies the constraints")]
    NoFeasibleGridPoint,
    #[error("invalid grid: {reason}")]
    InvalidGrid { reason: &'static str },
}

/// Axis-aligned scan box with uniform step.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lower: Vector,
    pub upper: Vector,
    pub step: f64,
}

impl GridSpec {
    pub fn new(lower: Vector, upper: Vector, step: f64) -> Result<Self, OracleError> {
        if lower.len() != upper.len() {
            return Err(OracleError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(OracleError::InvalidGrid {
                reason: "step must be positive and finite",
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| u <= l) {
            return Err(OracleError::InvalidGrid {
                reason: "upper must exceed lower componentwise",
            });
        }
        let spec = Self { lower, upper, step };
        let points = spec.total_points();
        if points > 1e8 {
            return Err(OracleError::GridTooLarge { points });
        }
        Ok(spec)
    }

    fn counts(&self) -> Vec<usize> {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(l, u)| ((u - l) / self.step).floor() as usize + 1)
            .collect()
    }

    pub fn total_points(&self) -> f64 {
        self.counts().iter().map(|&c| c as f64).product()
    }

    fn point(&self, counts: &[usize], mut linear: usize) -> Vector {
        let mut x = self.lower.clone();
        for (dim, &count) in counts.iter().enumerate() {
            x[dim] += (linear % count) as f64 * self.step;
            linear /= count;
        }
        x
    }
}

/// Flattened problem data for the scan kernel. The inner loop runs on plain
/// slices with no allocation so that full 1e8-point scans stay cheap.
struct ScanData {
    n: usize,
    p: Vec<f64>,
    q: Vec<f64>,
    s: f64,
    /// Rows of all constraints as (coefficients, bound, slack): equalities
    /// contribute two inequality rows `±a_i' x ≤ ±b_i + slack`.
    rows: Vec<(Vec<f64>, f64, f64)>,
}

impl ScanData {
    #[inline]
    fn value(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut quad = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.p[i * n + j] * x[j];
            }
            quad += x[i] * row;
        }
        let mut lin = 0.0;
        for i in 0..n {
            lin += self.q[i] * x[i];
        }
        0.5 * quad + lin + self.s
    }

    #[inline]
    fn feasible(&self, x: &[f64]) -> bool {
        self.rows.iter().all(|(c, d, slack)| {
            let mut dot = 0.0;
            for i in 0..self.n {
                dot += c[i] * x[i];
            }
            dot <= d + slack
        })
    }
}

fn decode(counts: &[usize], lower: &[f64], step: f64, mut linear: usize, x: &mut [f64]) {
    for (dim, &count) in counts.iter().enumerate() {
        x[dim] = lower[dim] + (linear % count) as f64 * step;
        linear /= count;
    }
}

/// Exhaustively minimize a CQF over the feasible grid points of
/// `A x = b` (slack `step·‖a_i‖` per row) and `c_i' x ≤ d_i`
/// (slack `step·‖c_i‖`). Returns the grid minimum and every feasible grid
/// point whose value is within one step of it.
pub fn grid_minimize(
    f: &CqfSpec,
    equality: Option<(&Matrix, &Vector)>,
    ineq: &[(Vector, f64)],
    g: &GridSpec,
) -> Result<(f64, Vec<Vector>), OracleError> {
    let n = f.dim();
    if g.lower.len() != n {
        return Err(OracleError::DimensionMismatch {
            expected: n,
            got: g.lower.len(),
        });
    }
    if n > 4 {
        return Err(OracleError::DimensionTooLarge { n });
    }
    if let Some((a, b)) = equality {
        if a.ncols() != n || b.len() != a.nrows() {
            return Err(OracleError::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
    }

    let mut rows: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    if let Some((a, b)) = equality {
        for i in 0..a.nrows() {
            let coeffs: Vec<f64> = a.row(i).iter().copied().collect();
            let slack = g.step * a.row(i).norm();
            rows.push((coeffs.clone(), b[i], slack));
            rows.push((coeffs.iter().map(|v| -v).collect(), -b[i], slack));
        }
    }
    for (c, d) in ineq {
        let coeffs: Vec<f64> = c.iter().copied().collect();
        rows.push((coeffs, *d, g.step * c.norm()));
    }
    let scan = ScanData {
        n,
        p: f.p().transpose().iter().copied().collect(),
        q: f.q().iter().copied().collect(),
        s: f.s(),
        rows,
    };

    let counts = g.counts();
    let total: usize = counts.iter().product();
    let lower: Vec<f64> = g.lower.iter().copied().collect();
    let step = g.step;
    let chunk = 1 << 16;
    let starts: Vec<usize> = (0..total).step_by(chunk).collect();

    let scan_chunk = |start: usize, visit: &mut dyn FnMut(usize, &[f64])| {
        let end = (start + chunk).min(total);
        let mut x = [0.0_f64; 4];
        decode(&counts, &lower, step, start, &mut x[..counts.len()]);
        let mut odometer = vec![0usize; counts.len()];
        let mut lin = start;
        for (dim, &count) in counts.iter().enumerate() {
            odometer[dim] = lin % count;
            lin /= count;
        }
        for idx in start..end {
            visit(idx, &x[..counts.len()]);
            for dim in 0..counts.len() {
                odometer[dim] += 1;
                if odometer[dim] < counts[dim] {
                    x[dim] = lower[dim] + odometer[dim] as f64 * step;
                    break;
                }
                odometer[dim] = 0;
                x[dim] = lower[dim];
            }
        }
    };

    let min = starts
        .par_iter()
        .map(|&start| {
            let mut local = f64::INFINITY;
            scan_chunk(start, &mut |_, x| {
                if scan.feasible(x) {
                    let v = scan.value(x);
                    if v < local {
                        local = v;
                    }
                }
            });
            local
        })
        .reduce(|| f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(OracleError::NoFeasibleGridPoint);
    }

    let cutoff = min + g.step;
    let mut argmin_indices: Vec<usize> = starts
        .par_iter()
        .map(|&start| {
            let mut local = Vec::new();
            scan_chunk(start, &mut |idx, x| {
                if scan.feasible(x) && scan.value(x) <= cutoff {
                    local.push(idx);
                }
            });
            local
        })
        .reduce(Vec::new, |mut acc, mut part| {
            acc.append(&mut part);
            acc
        });
    argmin_indices.sort_unstable();
    let argmins = argmin_indices
        .into_iter()
        .map(|idx| g.point(&counts, idx))
        .collect();
    Ok((min, argmins))
}

/// Real roots of `m z² + k z + c = 0` for `m > 0` by the classical formula.
///
/// The boundary convention matches the CQE classifier: a discriminant within
/// `1e-10 · max(1, k²/m, 4|c|)` of zero counts as a double root.
pub fn scalar_roots(m: f64, k: f64, c: f64) -> Vec<f64> {
    assert!(m > 0.0, "scalar_roots requires m > 0");
    let quarter = k * k / (4.0 * m) - c;
    let scale = (k * k / m).abs().max((4.0 * c).abs()).max(1.0);
    if quarter < -1e-10 * scale {
        return Vec::new();
    }
    if quarter.abs() <= 1e-10 * scale {
        return vec![-k / (2.0 * m)];
    }
    let disc = (k * k - 4.0 * m * c).sqrt();
    let mut roots = vec![(-k - disc) / (2.0 * m), (-k + disc) / (2.0 * m)];
    roots.sort_by(f64::total_cmp);
    roots
}

/// `dim(N(A) ∩ N(P))`, computed as `n - rank([A; P])` from the singular
/// values of the stacked matrix.
pub fn nullspace_intersection_dim(a: &Matrix, p: &Matrix) -> Result<usize, OracleError> {
    if a.ncols() != p.ncols() {
        return Err(OracleError::DimensionMismatch {
            expected: a.ncols(),
            got: p.ncols(),
        });
    }
    let n = a.ncols();
    let rows = a.nrows() + p.nrows();
    let mut stacked = Matrix::zeros(rows, n);
    stacked.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    stacked.view_mut((a.nrows(), 0), (p.nrows(), n)).copy_from(p);
    let svd = stacked.svd(false, false);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = rows.max(n) as f64 * f64::EPSILON * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    Ok(n - rank)
}
