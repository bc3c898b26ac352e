//! Closed-form quadratic programming over the convex quadratic function (CQF)
//! `F(x) = x' P x / 2 + q' x + s` with `P` symmetric PSD:
//!
//! - unconstrained minimization and level-set preimages (the preimage of any
//!   level is a CQE solution set with `M = P/2`, `k = q`, `c = s - l`);
//! - equality-constrained QP with the full three-way categorization into an
//!   equivalent unconstrained QP, an unbounded LP, or a constant function,
//!   by down-casting onto the constraint variety `x = A†b + V2 y`;
//! - the extended QP restricted to `x, q ∈ R(P)`, whose optimum is always
//!   finite;
//! - KKT residual verification for candidate optima.

use crate::cqe::{
    parameterize, preimage_of_level, CqeError, CqeProblem, CqeSolutionSet, LevelPreimage,
};
use crate::linalg::{
    self, lstsq, nullspace_basis, pseudoinverse, spectral_decompose, LinalgError, RankPolicy,
    SpectralData,
};
use crate::{Matrix, Tolerances, Vector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Cqe(#[from] CqeError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("level {level} is below the finite optimum {minimum}")]
    LevelBelowMinimum { level: f64, minimum: f64 },
    #[error("constraint system is inconsistent: least-squares residual {residual:.3e}")]
    InconsistentConstraint { residual: f64 },
    #[error("constraint matrix does not have full row rank: rank {rank} < {rows}")]
    RankDeficientRows { rank: usize, rows: usize },
    #[error("q lies outside R(P): deviation {deviation:.3e}")]
    QNotInRange { deviation: f64 },
}

/// The CQF triple `(P, q, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqfSpec {
    p: Matrix,
    q: Vector,
    s: f64,
}

impl CqfSpec {
    pub fn new(p: Matrix, q: Vector, s: f64) -> Result<Self, QpError> {
        if p.nrows() != p.ncols() {
            return Err(LinalgError::NotSquare {
                rows: p.nrows(),
                cols: p.ncols(),
            }
            .into());
        }
        if q.len() != p.nrows() {
            return Err(QpError::DimensionMismatch {
                expected: p.nrows(),
                got: q.len(),
            });
        }
        if !p.iter().all(|x| x.is_finite()) || !q.iter().all(|x| x.is_finite()) || !s.is_finite() {
            return Err(LinalgError::NonFinite.into());
        }
        Ok(Self { p, q, s })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }
    pub fn p(&self) -> &Matrix {
        &self.p
    }
    pub fn q(&self) -> &Vector {
        &self.q
    }
    pub fn s(&self) -> f64 {
        self.s
    }

    /// `F(x) = x' P x / 2 + q' x + s`.
    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x) + self.s
    }

    /// `∇F(x) = P x + q`.
    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.p * x + &self.q
    }

    /// The CQE whose solutions are the preimage of level `l`.
    pub fn level_cqe(&self, l: f64) -> CqeProblem {
        CqeProblem::new(&self.p * 0.5, self.q.clone(), self.s - l)
            .expect("validated CQF data maps to a valid CQE")
    }
}

/// Outcome of unconstrained minimization.
///
/// `bounded` iff `q ∈ R(P)`; then the optimal value is
/// `l* = s - q' P† q / 2` and the optima are `x_particular ⊕ N(P)`.
/// When unbounded, `descent` is a direction in `N(P)` along which `F`
/// decreases without bound.
#[derive(Debug, Clone, PartialEq)]
pub struct UnconstrainedOutcome {
    pub bounded: bool,
    pub l_star: Option<f64>,
    pub x_particular: Vector,
    pub freedom_basis: Matrix,
    pub descent: Option<Vector>,
}

/// Minimize the CQF without constraints.
pub fn unconstrained_solve(
    f: &CqfSpec,
    tols: &Tolerances,
) -> Result<UnconstrainedOutcome, QpError> {
    let sd = spectral_decompose(&f.p, tols.rank)?;
    let bounded = linalg::in_range(&f.q, &sd, tols.membership)?;
    let x_particular = -sd.apply_pinv(&f.q);
    let (l_star, descent) = if bounded {
        (Some(f.s - 0.5 * f.q.dot(&sd.apply_pinv(&f.q))), None)
    } else {
        let q_null = sd.project_null(&f.q);
        (None, Some(-&q_null / q_null.norm()))
    };
    Ok(UnconstrainedOutcome {
        bounded,
        l_star,
        x_particular,
        freedom_basis: sd.u2,
        descent,
    })
}

/// Preimage of the level set `F(x) = l` as a CQE solution set
/// (`M = P/2`, `k = q`, `c = s - l`).
pub fn level_preimage(
    f: &CqfSpec,
    l: f64,
    tols: &Tolerances,
) -> Result<CqeSolutionSet, QpError> {
    match parameterize(&f.level_cqe(l), tols) {
        Ok(set) => Ok(set),
        Err(CqeError::UnsolvableCqe { .. }) => {
            let outcome = unconstrained_solve(f, tols)?;
            Err(QpError::LevelBelowMinimum {
                level: l,
                minimum: outcome.l_star.unwrap_or(f64::NEG_INFINITY),
            })
        }
        Err(other) => Err(other.into()),
    }
}

/// The three-way categorization of an equality-constrained QP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqQpCategory {
    /// Equivalent to an unconstrained QP with finite optimum.
    FiniteQp,
    /// Equivalent QP but unbounded below (reduced gradient outside the
    /// reduced Hessian's range).
    UnboundedQp,
    /// Equivalent to an unconstrained LP, unbounded below.
    UnboundedLp,
    /// Objective is constant on the constraint variety.
    Constant,
}

/// Category-specific data of an equality-constrained solve.
#[derive(Debug, Clone, PartialEq)]
pub enum EqQpDetail {
    FiniteQp {
        l_star: f64,
        /// `x̄*_p = A†b - V2 (V2'PV2)† V2'(q + P A†b)`.
        x_particular: Vector,
        /// Orthonormal columns spanning the optima's freedom,
        /// `V2 · N(V2'PV2)`; empty iff the optimum is unique.
        freedom_basis: Matrix,
        unique: bool,
    },
    UnboundedQp { direction: Vector },
    UnboundedLp { direction: Vector },
    Constant { value: f64 },
}

/// Result of [`equality_solve`]: categorization, detail, and the constraint
/// data (`V2`, `A†`, feasible point `A†b`) it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct EqQpOutcome {
    pub category: EqQpCategory,
    pub detail: EqQpDetail,
    pub v2: Matrix,
    pub a_pinv: Matrix,
    pub feasible_point: Vector,
}

impl EqQpOutcome {
    pub fn l_star(&self) -> Option<f64> {
        match &self.detail {
            EqQpDetail::FiniteQp { l_star, .. } => Some(*l_star),
            EqQpDetail::Constant { value } => Some(*value),
            _ => None,
        }
    }
    pub fn x_particular(&self) -> Option<&Vector> {
        match &self.detail {
            EqQpDetail::FiniteQp { x_particular, .. } => Some(x_particular),
            _ => None,
        }
    }
    pub fn freedom_basis(&self) -> Option<&Matrix> {
        match &self.detail {
            EqQpDetail::FiniteQp { freedom_basis, .. } => Some(freedom_basis),
            _ => None,
        }
    }
    pub fn unique(&self) -> Option<bool> {
        match &self.detail {
            EqQpDetail::FiniteQp { unique, .. } => Some(*unique),
            _ => None,
        }
    }
}

/// Reduced Hessian `V2' P V2`, symmetrized, with a zero test against the
/// ambient scale of `P` (an exactly-zero reduced block only accumulates
/// rounding of order `ε‖P‖`).
fn reduced_hessian(p: &Matrix, v2: &Matrix) -> (Matrix, bool) {
    let red = v2.transpose() * p * v2;
    let red = (&red + red.transpose()) * 0.5;
    let ambient = p.norm().max(1.0);
    let zero = red.norm() <= 1e-12 * (p.nrows() as f64) * ambient;
    (red, zero)
}

fn reduced_spectral(
    red: &Matrix,
    p: &Matrix,
    tols: &Tolerances,
) -> Result<SpectralData, LinalgError> {
    // Eigenvalues of the reduced block are judged against both its own scale
    // and the ambient scale of P.
    let dim = red.nrows().max(1);
    let own = tols.rank.threshold(dim, red.norm());
    let ambient = (dim as f64) * f64::EPSILON * p.norm();
    spectral_decompose(red, RankPolicy::Absolute(own.max(ambient)))
}

/// Solve `minimize F(x) subject to A x = b` for full-row-rank `A` in closed
/// form, categorizing into finite QP / unbounded QP / unbounded LP / constant.
///
/// `m = n` is the single-feasible-point extension (`V2 := 0`): the only
/// feasible point `A†b` is returned as a unique finite optimum.
pub fn equality_solve(
    f: &CqfSpec,
    a: &Matrix,
    b: &Vector,
    tols: &Tolerances,
) -> Result<EqQpOutcome, QpError> {
    let n = f.dim();
    let m = a.nrows();
    if a.ncols() != n {
        return Err(QpError::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if b.len() != m {
        return Err(QpError::DimensionMismatch {
            expected: m,
            got: b.len(),
        });
    }
    if m > n {
        return Err(QpError::RankDeficientRows { rank: n, rows: m });
    }

    if m == n {
        let (x, res, rank) = lstsq(a, b, tols.rank)?;
        if rank < m {
            return rank_deficient_outcome(a, b, rank, tols);
        }
        debug_assert!(res <= 1e-9 * b.norm().max(1.0));
        let a_pinv = pinv_from_lstsq(a, tols)?;
        return Ok(EqQpOutcome {
            category: EqQpCategory::FiniteQp,
            detail: EqQpDetail::FiniteQp {
                l_star: f.value(&x),
                x_particular: x.clone(),
                freedom_basis: Matrix::zeros(n, 0),
                unique: true,
            },
            v2: Matrix::zeros(n, 0),
            a_pinv,
            feasible_point: x,
        });
    }

    let basis = match nullspace_basis(a, tols.rank) {
        Ok(basis) => basis,
        Err(LinalgError::RankDeficientRows { rank, .. }) => {
            return rank_deficient_outcome(a, b, rank, tols)
        }
        Err(other) => return Err(other.into()),
    };
    let v2 = basis.v2;
    let a_pinv = basis.pinv;
    let feasible_point = &a_pinv * b;

    let (red, red_zero) = reduced_hessian(&f.p, &v2);
    let g = v2.transpose() * (&f.q + &f.p * &feasible_point);

    let detail = if red_zero {
        let g_scale = (f.q.norm() + f.p.norm() * feasible_point.norm()).max(1.0);
        if g.norm() > tols.membership * g_scale {
            EqQpDetail::UnboundedLp {
                direction: &v2 * (-&g / g.norm()),
            }
        } else {
            EqQpDetail::Constant {
                value: f.s
                    + f.q.dot(&feasible_point)
                    + 0.5 * feasible_point.dot(&(&f.p * &feasible_point)),
            }
        }
    } else {
        let red_sd = reduced_spectral(&red, &f.p, tols)?;
        if !linalg::in_range(&g, &red_sd, tols.membership)? {
            let g_null = red_sd.project_null(&g);
            EqQpDetail::UnboundedQp {
                direction: &v2 * (-&g_null / g_null.norm()),
            }
        } else {
            let red_pinv = pseudoinverse(&red_sd);
            let x_particular = &feasible_point - &v2 * (&red_pinv * &g);
            // l̄* = [b'(A†)'P/2 + q'] [I - V2 (V2'PV2)† V2'P] A†b + s
            //       - q' V2 (V2'PV2)† V2' q / 2
            let row = (&f.p * &feasible_point * 0.5 + &f.q).transpose();
            let correction = Matrix::identity(n, n) - &v2 * &red_pinv * v2.transpose() * &f.p;
            let vq = v2.transpose() * &f.q;
            let l_star = (row * correction * &feasible_point)[(0, 0)] + f.s
                - 0.5 * vq.dot(&(&red_pinv * &vq));
            let unique = red_sd.rank == n - m;
            let freedom_basis = &v2 * &red_sd.u2;
            debug_assert!((f.value(&x_particular) - l_star).abs() <= 1e-7 * l_star.abs().max(1.0));
            EqQpDetail::FiniteQp {
                l_star,
                x_particular,
                freedom_basis,
                unique,
            }
        }
    };
    Ok(EqQpOutcome {
        category: match &detail {
            EqQpDetail::FiniteQp { .. } => EqQpCategory::FiniteQp,
            EqQpDetail::UnboundedQp { .. } => EqQpCategory::UnboundedQp,
            EqQpDetail::UnboundedLp { .. } => EqQpCategory::UnboundedLp,
            EqQpDetail::Constant { .. } => EqQpCategory::Constant,
        },
        detail,
        v2,
        a_pinv,
        feasible_point,
    })
}

fn rank_deficient_outcome(
    a: &Matrix,
    b: &Vector,
    rank: usize,
    tols: &Tolerances,
) -> Result<EqQpOutcome, QpError> {
    let (_, res, _) = lstsq(a, b, tols.rank)?;
    if res > 1e-9 * b.norm().max(1.0) {
        Err(QpError::InconsistentConstraint { residual: res })
    } else {
        Err(QpError::RankDeficientRows {
            rank,
            rows: a.nrows(),
        })
    }
}

fn pinv_from_lstsq(a: &Matrix, tols: &Tolerances) -> Result<Matrix, QpError> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut pinv = Matrix::zeros(n, m);
    for j in 0..m {
        let mut e = Vector::zeros(m);
        e[j] = 1.0;
        let (col, _, _) = lstsq(a, &e, tols.rank)?;
        pinv.set_column(j, &col);
    }
    Ok(pinv)
}

/// KKT residual of a candidate optimum for `minimize F s.t. Ax = b`.
///
/// The multiplier is the least-squares solution of `A'λ = -(Px + q)`;
/// the residual `max(‖Ax - b‖, ‖Px + A'λ + q‖)` vanishes iff `x` is a KKT
/// point.
pub fn kkt_residual(
    f: &CqfSpec,
    a: &Matrix,
    b: &Vector,
    x: &Vector,
) -> Result<(f64, Vector), QpError> {
    let n = f.dim();
    if a.ncols() != n || x.len() != n || b.len() != a.nrows() {
        return Err(QpError::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let grad = f.gradient(x);
    let (lambda, _, _) = lstsq(&a.transpose(), &(-&grad), RankPolicy::Default)?;
    let primal = (a * x - b).norm();
    let dual = (&grad + a.transpose() * &lambda).norm();
    Ok((primal.max(dual), lambda))
}

/// Result of the extended QP `minimize F(x) subject to x, q ∈ R(P)`:
/// the optimum is always finite, `ľ* = s - q'P†q/2` at `x̂* = -P†q`, and the
/// preimage of any level is a sphere image in `R(P)`.
#[derive(Debug, Clone)]
pub struct ExtendedOutcome {
    pub l_star: f64,
    pub x_star: Vector,
    cqf_as_cqe: CqeProblem,
    tols: Tolerances,
}

impl ExtendedOutcome {
    /// Preimage of the level set `F(x) = level` inside `R(P)`:
    /// `x = -P†q + sqrt(q'P†q - 2s + 2·level) · P^{†/2} · ρ̌`, unit
    /// `ρ̌ ∈ R(P)`.
    pub fn preimage(&self, level: f64) -> Result<LevelPreimage, QpError> {
        match preimage_of_level(&self.cqf_as_cqe, level, &self.tols) {
            Ok(pre) => Ok(pre),
            Err(CqeError::LevelBelowMinimum { level, minimum }) => {
                Err(QpError::LevelBelowMinimum { level, minimum })
            }
            Err(other) => Err(other.into()),
        }
    }
}

/// Solve the extended QP. Errors with [`QpError::QNotInRange`] when the
/// constraint `q ∈ R(P)` fails.
pub fn extended_solve(f: &CqfSpec, tols: &Tolerances) -> Result<ExtendedOutcome, QpError> {
    let sd = spectral_decompose(&f.p, tols.rank)?;
    let deviation = sd.project_null(&f.q).norm();
    if deviation > tols.membership * f.q.norm().max(1.0) {
        return Err(QpError::QNotInRange { deviation });
    }
    let x_star = -sd.apply_pinv(&f.q);
    let l_star = f.s - 0.5 * f.q.dot(&sd.apply_pinv(&f.q));
    // F restricted to R(P), as the CQF w'(P/2)w + q'w + s.
    let cqf_as_cqe = CqeProblem::new(&f.p * 0.5, f.q.clone(), f.s)
        .expect("validated CQF data maps to a valid CQE");
    Ok(ExtendedOutcome {
        l_star,
        x_star,
        cqf_as_cqe,
        tols: *tols,
    })
}
