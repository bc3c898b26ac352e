//! Closed-form solver for the general QP
//!
//! ```text
//! minimize  F(x) = x'Px/2 + q'x + s
//! s.t.      A x = b            (full row rank, m < n; optional)
//!           c_i' x <= d_i      (i = 1..κ)
//! ```
//!
//! No feasible starting point is required. The equality-constrained base
//! problem is solved first; if its reduced Hessian is positive definite and
//! the particular optimum satisfies every inequality, that optimum is final.
//! Otherwise every nonempty subset of inequality borders is turned into an
//! augmented equality system, solved in closed form, filtered for feasibility
//! against the remaining inequalities, and gathered into a candidate ledger;
//! the optimum is the ledger minimum. Inconsistent augmentations and
//! rank-deficient ones (already covered by a reduced subset) are skipped, as
//! are subsets whose reduced problem is an unbounded LP/QP or a constant —
//! their terminal optima are picked up at supersets.
//!
//! Inequality-only problems run the same loop with the unconstrained problem
//! as base (`V2 = I`, `A†b = 0`).

use crate::linalg::{lstsq, spectral_decompose};
use crate::qp::{equality_solve, CqfSpec, EqQpDetail, QpError};
use crate::{LinalgError, Matrix, Tolerances, Vector};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpSolveError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("equality constraint matrix must have full row rank m < n")]
    RankDeficientRows { rank: usize, rows: usize },
    #[error("no candidate optimum found and the base optimum is infeasible; the problem has no feasible point (or no finite optimum)")]
    InfeasibleProblem,
    #[error("the problem is unbounded below: the base problem has no finite optimum and no inequality border bounds it")]
    UnboundedProblem,
    #[error("{kappa} inequality constraints exceed the subset cap {cap} (2^κ enumeration)")]
    SubsetCapExceeded { kappa: usize, cap: usize },
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
}

/// A general QP instance. `equality` is `None` for inequality-only problems.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub f: CqfSpec,
    pub equality: Option<(Matrix, Vector)>,
    pub ineq: Vec<(Vector, f64)>,
}

impl QpProblem {
    pub fn new(
        f: CqfSpec,
        equality: Option<(Matrix, Vector)>,
        ineq: Vec<(Vector, f64)>,
    ) -> Result<Self, QpSolveError> {
        let n = f.dim();
        if let Some((a, b)) = &equality {
            if a.ncols() != n {
                return Err(QpSolveError::DimensionMismatch {
                    expected: n,
                    got: a.ncols(),
                });
            }
            if b.len() != a.nrows() {
                return Err(QpSolveError::DimensionMismatch {
                    expected: a.nrows(),
                    got: b.len(),
                });
            }
            if !a.iter().all(|x| x.is_finite()) || !b.iter().all(|x| x.is_finite()) {
                return Err(LinalgError::NonFinite.into());
            }
        }
        for (c, d) in &ineq {
            if c.len() != n {
                return Err(QpSolveError::DimensionMismatch {
                    expected: n,
                    got: c.len(),
                });
            }
            if !c.iter().all(|x| x.is_finite()) || !d.is_finite() {
                return Err(LinalgError::NonFinite.into());
            }
        }
        Ok(Self { f, equality, ineq })
    }

    pub fn kappa(&self) -> usize {
        self.ineq.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Enumerate all optima even after the base stage finds one.
    #[default]
    Full,
    /// Return at the base stage whenever its particular optimum is feasible
    /// and of finite value, skipping the search for further optima.
    Expedited,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub mode: Mode,
    /// Enumeration is 2^κ; refuse problems with more inequalities than this.
    pub subset_cap: usize,
    /// Evaluate subsets in parallel (bit-identical to sequential).
    pub parallel: bool,
    /// Record a per-subset report of the enumeration.
    pub trace: bool,
    pub tols: Tolerances,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Full,
            subset_cap: 20,
            parallel: false,
            trace: false,
            tols: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateKind {
    /// Base-stage optimum (empty subset).
    EqualityBase,
    /// Optimum of an underdetermined augmented system (on a border edge).
    Edge,
    /// Unique solution of a full-column-rank augmented system.
    Vertex,
}

/// One feasible optimality candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub value: f64,
    pub point: Vector,
    /// Indices (1-based) of the inequality borders active in the augmentation.
    pub subset: Vec<usize>,
    pub kind: CandidateKind,
}

/// All feasible candidates gathered by the enumeration, in canonical order
/// (by subset, then value). At most 2^κ entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateLedger {
    pub entries: Vec<LedgerEntry>,
}

/// Why a subset did or did not produce a candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsetOutcome {
    /// `b̃ ∉ R(Ã)`: the borders do not intersect.
    Inconsistent,
    /// Consistent but rank-deficient augmentation; covered by the reduced
    /// full-rank subset.
    RankDeficientSkipped { rank: usize },
    /// Underdetermined full-row-rank augmentation solved as an equality QP.
    Edge {
        category: EdgeCategory,
        point: Option<Vector>,
        value: Option<f64>,
        candidate: bool,
    },
    /// Full-column-rank augmentation: the single point `Ã†b̃`.
    Vertex {
        point: Vector,
        value: Option<f64>,
        candidate: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EdgeCategory {
    Qp,
    QpUnbounded,
    Lp,
    /// Constant on the border; its value reappears at feasible supersets.
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetReport {
    pub subset: Vec<usize>,
    pub outcome: SubsetOutcome,
}

/// Solver output: optimal value, terminal optima, the border subsets they sit
/// on, and the full candidate ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolveResult {
    pub l_star: f64,
    /// Distinct co-optimal points, lexicographically sorted.
    pub terminal_optima: Vec<Vector>,
    /// Subsets of inequality indices whose borders carry an optimum.
    pub optimality_subsets: Vec<Vec<usize>>,
    pub ledger: CandidateLedger,
    /// True when the solve returned at the base stage without enumeration.
    pub expedited: bool,
    pub trace: Option<Vec<SubsetReport>>,
}

fn feasible(ineq: &[(Vector, f64)], x: &Vector, skip: &[usize], feas_tol: f64) -> bool {
    ineq.iter().enumerate().all(|(idx, (c, d))| {
        if skip.contains(&(idx + 1)) {
            return true;
        }
        let slack_scale = (c.norm() * x.norm()).max(d.abs()).max(1.0);
        c.dot(x) <= d + feas_tol * slack_scale
    })
}

struct BaseStage {
    /// Base particular optimum when the reduced problem is a finite QP and
    /// the point satisfies every inequality.
    entry: Option<LedgerEntry>,
    /// Finite, feasible, and unique base optimum: final immediately.
    immediate: bool,
    /// The base particular optimum existed and was feasible (evidence that
    /// an empty ledger means unboundedness rather than infeasibility).
    saw_feasible: bool,
}

fn base_stage(
    p: &QpProblem,
    opts: &SolveOptions,
    assume_pd: bool,
) -> Result<BaseStage, QpSolveError> {
    let n = p.f.dim();
    let tols = &opts.tols;
    // Base optimum data: (value, point, unique) when the base problem is a
    // finite QP, None when it is unbounded or constant.
    let finite = if let Some((a, b)) = &p.equality {
        if a.nrows() >= n {
            return Err(QpSolveError::RankDeficientRows {
                rank: n,
                rows: a.nrows(),
            });
        }
        let out = match equality_solve(&p.f, a, b, tols) {
            Ok(out) => out,
            Err(QpError::RankDeficientRows { rank, rows }) => {
                return Err(QpSolveError::RankDeficientRows { rank, rows })
            }
            Err(other) => return Err(other.into()),
        };
        match out.detail {
            EqQpDetail::FiniteQp {
                l_star,
                x_particular,
                unique,
                ..
            } => Some((l_star, x_particular, unique)),
            _ => None,
        }
    } else {
        // Inequality-only: the base is the unconstrained problem
        // (V2 = I, A†b = 0).
        let out = crate::qp::unconstrained_solve(&p.f, tols)?;
        out.bounded.then(|| {
            let unique = out.freedom_basis.ncols() == 0;
            (out.l_star.expect("bounded"), out.x_particular, unique)
        })
    };

    let mut stage = BaseStage {
        entry: None,
        immediate: false,
        saw_feasible: false,
    };
    if let Some((value, point, unique)) = finite {
        if feasible(&p.ineq, &point, &[], tols.feasibility) {
            stage.saw_feasible = true;
            stage.immediate = assume_pd || unique;
            stage.entry = Some(LedgerEntry {
                value,
                point,
                subset: Vec::new(),
                kind: CandidateKind::EqualityBase,
            });
        }
    }
    Ok(stage)
}

fn subset_indices(mask: u32, kappa: usize) -> Vec<usize> {
    (0..kappa)
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| i + 1)
        .collect()
}

fn augmented_system(p: &QpProblem, subset: &[usize]) -> (Matrix, Vector) {
    let n = p.f.dim();
    let m = p.equality.as_ref().map_or(0, |(a, _)| a.nrows());
    let rows = m + subset.len();
    let mut a_tilde = Matrix::zeros(rows, n);
    let mut b_tilde = Vector::zeros(rows);
    if let Some((a, b)) = &p.equality {
        a_tilde.view_mut((0, 0), (m, n)).copy_from(a);
        b_tilde.rows_mut(0, m).copy_from(b);
    }
    for (row, &idx) in subset.iter().enumerate() {
        let (c, d) = &p.ineq[idx - 1];
        a_tilde.row_mut(m + row).copy_from(&c.transpose());
        b_tilde[m + row] = *d;
    }
    (a_tilde, b_tilde)
}

/// Outcome of one subset: candidate (if any), report, and whether the subset
/// exhibited a feasible point (evidence used to tell an unbounded problem
/// from an infeasible one when the ledger ends up empty).
type SubsetEvaluation = (Option<LedgerEntry>, SubsetReport, bool);

fn evaluate_subset(
    p: &QpProblem,
    opts: &SolveOptions,
    assume_pd: bool,
    mask: u32,
) -> Result<SubsetEvaluation, QpSolveError> {
    let tols = &opts.tols;
    let n = p.f.dim();
    let m = p.equality.as_ref().map_or(0, |(a, _)| a.nrows());
    let subset = subset_indices(mask, p.kappa());
    let (a_tilde, b_tilde) = augmented_system(p, &subset);

    let (_, res, rank) = lstsq(&a_tilde, &b_tilde, tols.rank)?;
    if res > 1e-9 * b_tilde.norm().max(1.0) {
        return Ok((
            None,
            SubsetReport {
                subset,
                outcome: SubsetOutcome::Inconsistent,
            },
            false,
        ));
    }
    if rank < m + subset.len() && rank < n {
        return Ok((
            None,
            SubsetReport {
                subset,
                outcome: SubsetOutcome::RankDeficientSkipped { rank },
            },
            false,
        ));
    }

    if rank == m + subset.len() && rank < n {
        // Edge: augmented equality QP, still underdetermined.
        let out = equality_solve(&p.f, &a_tilde, &b_tilde, tols)?;
        let (category, point, value, candidate, entry) = match &out.detail {
            EqQpDetail::FiniteQp {
                l_star,
                x_particular,
                ..
            } => {
                // Feasibility is only checked against borders not augmented in.
                let feas = feasible(&p.ineq, x_particular, &subset, tols.feasibility);
                let entry = feas.then(|| LedgerEntry {
                    value: *l_star,
                    point: x_particular.clone(),
                    subset: subset.clone(),
                    kind: CandidateKind::Edge,
                });
                (
                    EdgeCategory::Qp,
                    Some(x_particular.clone()),
                    feas.then_some(*l_star),
                    feas,
                    entry,
                )
            }
            EqQpDetail::UnboundedQp { .. } if !assume_pd => {
                (EdgeCategory::QpUnbounded, None, None, false, None)
            }
            EqQpDetail::UnboundedLp { .. } => (EdgeCategory::Lp, None, None, false, None),
            EqQpDetail::Constant { value } => (
                EdgeCategory::Constant { value: *value },
                None,
                None,
                false,
                None,
            ),
            EqQpDetail::UnboundedQp { .. } => {
                unreachable!("a positive definite Hessian cannot yield an unbounded reduced QP")
            }
        };
        let evidence =
            candidate || feasible(&p.ineq, &out.feasible_point, &subset, tols.feasibility);
        return Ok((
            entry,
            SubsetReport {
                subset,
                outcome: SubsetOutcome::Edge {
                    category,
                    point,
                    value,
                    candidate,
                },
            },
            evidence,
        ));
    }

    // Vertex: rank(Ã) = n, single point Ã†b̃.
    let (x_hat, _, _) = lstsq(&a_tilde, &b_tilde, tols.rank)?;
    let feas = feasible(&p.ineq, &x_hat, &subset, tols.feasibility);
    let value = feas.then(|| p.f.value(&x_hat));
    let entry = feas.then(|| LedgerEntry {
        value: value.expect("set when feasible"),
        point: x_hat.clone(),
        subset: subset.clone(),
        kind: CandidateKind::Vertex,
    });
    Ok((
        entry,
        SubsetReport {
            subset,
            outcome: SubsetOutcome::Vertex {
                point: x_hat,
                value,
                candidate: feas,
            },
        },
        feas,
    ))
}

fn finalize(
    mut ledger: Vec<LedgerEntry>,
    trace: Option<Vec<SubsetReport>>,
    expedited: bool,
    saw_feasible: bool,
    tols: &Tolerances,
) -> Result<QpSolveResult, QpSolveError> {
    if ledger.is_empty() {
        return Err(if saw_feasible {
            QpSolveError::UnboundedProblem
        } else {
            QpSolveError::InfeasibleProblem
        });
    }
    ledger.sort_by(|a, b| {
        a.subset
            .cmp(&b.subset)
            .then_with(|| lex_cmp(&a.point, &b.point))
    });
    let l_star = ledger
        .iter()
        .map(|e| e.value)
        .fold(f64::INFINITY, f64::min);
    let value_tol = tols.feasibility * l_star.abs().max(1.0);
    let co_optimal: Vec<&LedgerEntry> = ledger
        .iter()
        .filter(|e| e.value <= l_star + value_tol)
        .collect();

    let mut optimality_subsets: Vec<Vec<usize>> =
        co_optimal.iter().map(|e| e.subset.clone()).collect();
    optimality_subsets.sort();
    optimality_subsets.dedup();

    let mut points: Vec<Vector> = co_optimal.iter().map(|e| e.point.clone()).collect();
    points.sort_by(|a, b| lex_cmp(a, b));
    let mut terminal_optima: Vec<Vector> = Vec::new();
    for p in points {
        let dup = terminal_optima
            .iter()
            .any(|prev| (&p - prev).norm() <= 1e-9 * p.norm().max(1.0));
        if !dup {
            terminal_optima.push(p);
        }
    }

    Ok(QpSolveResult {
        l_star,
        terminal_optima,
        optimality_subsets,
        ledger: CandidateLedger { entries: ledger },
        expedited,
        trace,
    })
}

fn lex_cmp(a: &Vector, b: &Vector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

fn solve_engine(
    p: &QpProblem,
    opts: &SolveOptions,
    assume_pd: bool,
) -> Result<QpSolveResult, QpSolveError> {
    let kappa = p.kappa();
    if kappa > opts.subset_cap {
        return Err(QpSolveError::SubsetCapExceeded {
            kappa,
            cap: opts.subset_cap,
        });
    }
    let base = base_stage(p, opts, assume_pd)?;

    let mut ledger: Vec<LedgerEntry> = Vec::new();
    let mut saw_feasible = base.saw_feasible;
    if let Some(entry) = base.entry {
        if base.immediate || opts.mode == Mode::Expedited {
            let trace = opts.trace.then(Vec::new);
            return finalize(vec![entry], trace, true, true, &opts.tols);
        }
        ledger.push(entry);
    }

    let masks: Vec<u32> = (1..(1u32 << kappa)).collect();
    let evaluated: Vec<SubsetEvaluation> = if opts.parallel {
        masks
            .par_iter()
            .map(|&mask| evaluate_subset(p, opts, assume_pd, mask))
            .collect::<Result<_, _>>()?
    } else {
        masks
            .iter()
            .map(|&mask| evaluate_subset(p, opts, assume_pd, mask))
            .collect::<Result<_, _>>()?
    };

    let mut trace = opts.trace.then(Vec::new);
    for (entry, report, evidence) in evaluated {
        saw_feasible |= evidence;
        if let Some(e) = entry {
            ledger.push(e);
        }
        if let Some(t) = trace.as_mut() {
            t.push(report);
        }
    }
    finalize(ledger, trace, false, saw_feasible, &opts.tols)
}

/// Solve the general QP (equality + inequality constraints) in closed form.
///
/// The formulation presumes the minimum is attained. When the feasible set is
/// unbounded along a descent direction that no border terminates, the ledger
/// minimum is the best border/vertex value, not the (infinite) infimum; when
/// no candidate exists at all, the error distinguishes infeasibility from
/// unboundedness on the evidence gathered during enumeration.
pub fn qp_solve(p: &QpProblem, opts: &SolveOptions) -> Result<QpSolveResult, QpSolveError> {
    solve_engine(p, opts, false)
}

/// The positive definite specialization: identical results with the rank and
/// range condition checks removed (they hold automatically when `P ≻ 0`).
pub fn qp_solve_pd(p: &QpProblem, opts: &SolveOptions) -> Result<QpSolveResult, QpSolveError> {
    let sd = spectral_decompose(p.f.p(), opts.tols.rank)?;
    if !sd.is_full_rank() {
        return Err(QpSolveError::NotPositiveDefinite);
    }
    solve_engine(p, opts, true)
}

/// The inequality-only variant: base stage is the unconstrained solve, the
/// enumeration runs with `A` absent (`V2 = I`, `A†b = 0`).
pub fn qp_solve_ineq_only(
    f: &CqfSpec,
    ineq: Vec<(Vector, f64)>,
    opts: &SolveOptions,
) -> Result<QpSolveResult, QpSolveError> {
    let p = QpProblem::new(f.clone(), None, ineq)?;
    qp_solve(&p, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cqf(p: &[f64], n: usize, q: &[f64], s: f64) -> CqfSpec {
        CqfSpec::new(
            Matrix::from_row_slice(n, n, p),
            Vector::from_row_slice(q),
            s,
        )
        .unwrap()
    }

    fn benchmark_pd_problem(d1: f64) -> QpProblem {
        QpProblem::new(
            cqf(&[4.0, 1.0, 1.0, 2.0], 2, &[-12.0, -10.0], 0.0),
            None,
            vec![
                (Vector::from_row_slice(&[1.0, 1.0]), d1),
                (Vector::from_row_slice(&[-1.0, 0.0]), 0.0),
                (Vector::from_row_slice(&[0.0, -1.0]), 0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn benchmark_inequality_qp() {
        let result = qp_solve(&benchmark_pd_problem(4.0), &SolveOptions::default()).unwrap();
        assert_relative_eq!(result.l_star, -28.5, epsilon = 1e-9);
        assert_eq!(result.terminal_optima.len(), 1);
        assert_relative_eq!(result.terminal_optima[0][0], 1.5, epsilon = 1e-9);
        assert_relative_eq!(result.terminal_optima[0][1], 2.5, epsilon = 1e-9);
        assert_eq!(result.optimality_subsets, vec![vec![1]]);
        assert!(!result.expedited);
        // Five candidates: subsets {1}, {3}, {1,2}, {2,3}, {1,3}.
        assert_eq!(result.ledger.entries.len(), 5);
    }

    #[test]
    fn relaxed_first_border_returns_at_base() {
        // With d1 = 10 the unconstrained optimum [2,4] is strictly feasible.
        let result = qp_solve(&benchmark_pd_problem(10.0), &SolveOptions::default()).unwrap();
        assert!(result.expedited);
        assert_relative_eq!(result.l_star, -32.0, epsilon = 1e-12);
        assert_relative_eq!(result.terminal_optima[0][0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(result.terminal_optima[0][1], 4.0, epsilon = 1e-12);
        assert_eq!(result.optimality_subsets, vec![Vec::<usize>::new()]);
    }

    #[test]
    fn pd_route_agrees() {
        let p = benchmark_pd_problem(4.0);
        let full = qp_solve(&p, &SolveOptions::default()).unwrap();
        let pd = qp_solve_pd(&p, &SolveOptions::default()).unwrap();
        assert_relative_eq!(full.l_star, pd.l_star, epsilon = 1e-12);
        assert_eq!(full.terminal_optima.len(), pd.terminal_optima.len());
        assert_eq!(full.optimality_subsets, pd.optimality_subsets);
    }

    #[test]
    fn pd_route_rejects_singular() {
        let p = QpProblem::new(
            cqf(&[1.0, 0.0, 0.0, 0.0], 2, &[0.0, 0.0], 0.0),
            None,
            vec![(Vector::from_row_slice(&[1.0, 0.0]), 1.0)],
        )
        .unwrap();
        assert!(matches!(
            qp_solve_pd(&p, &SolveOptions::default()),
            Err(QpSolveError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn singular_lifted_problem_terminal_optima() {
        // P = diag(1,0,0), q = 0, equality x3 = b, borders from the 2-D
        // benchmark lifted into 3-D.
        let b = 1.0;
        let p = QpProblem::new(
            cqf(
                &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                3,
                &[0.0, 0.0, 0.0],
                0.0,
            ),
            Some((
                Matrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]),
                Vector::from_row_slice(&[b]),
            )),
            vec![
                (Vector::from_row_slice(&[1.0, 1.0, 0.0]), 4.0),
                (Vector::from_row_slice(&[-1.0, 0.0, 0.0]), 0.0),
                (Vector::from_row_slice(&[0.0, -1.0, 0.0]), 0.0),
            ],
        )
        .unwrap();
        let opts = SolveOptions {
            trace: true,
            ..SolveOptions::default()
        };
        let result = qp_solve(&p, &opts).unwrap();
        assert_relative_eq!(result.l_star, 0.0, epsilon = 1e-9);
        assert_eq!(result.terminal_optima.len(), 2);
        assert_relative_eq!(result.terminal_optima[0][1], 0.0, epsilon = 1e-9);
        assert_relative_eq!(result.terminal_optima[1][1], 4.0, epsilon = 1e-9);
        // Candidates at ∅, {1}, {3}, {1,2}, {2,3} are co-optimal; {1,3} is the
        // value-8 vertex.
        assert_eq!(result.ledger.entries.len(), 6);
        assert_eq!(
            result.optimality_subsets,
            vec![vec![], vec![1], vec![1, 2], vec![2, 3], vec![3]]
        );
        // The {2} border is a constant case, skipped at its own subset.
        let trace = result.trace.as_ref().unwrap();
        let i2 = trace.iter().find(|r| r.subset == vec![2]).unwrap();
        match &i2.outcome {
            SubsetOutcome::Edge {
                category: EdgeCategory::Constant { value },
                candidate,
                ..
            } => {
                assert_relative_eq!(*value, 0.0, epsilon = 1e-12);
                assert!(!candidate);
            }
            other => panic!("expected constant edge, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_problem_errors() {
        let p = QpProblem::new(
            cqf(&[2.0, 0.0, 0.0, 2.0], 2, &[0.0, 0.0], 0.0),
            None,
            vec![
                (Vector::from_row_slice(&[1.0, 0.0]), -1.0),
                (Vector::from_row_slice(&[-1.0, 0.0]), -1.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            qp_solve(&p, &SolveOptions::default()),
            Err(QpSolveError::InfeasibleProblem)
        ));
    }

    #[test]
    fn unbounded_problem_errors() {
        // minimize x1²/2 + x2 with x1 ≤ -1: feasible, x2 free below, and the
        // only border is itself an unbounded LP, so the ledger stays empty.
        let p = QpProblem::new(
            cqf(&[1.0, 0.0, 0.0, 0.0], 2, &[0.0, 1.0], 0.0),
            None,
            vec![(Vector::from_row_slice(&[1.0, 0.0]), -1.0)],
        )
        .unwrap();
        assert!(matches!(
            qp_solve(&p, &SolveOptions::default()),
            Err(QpSolveError::UnboundedProblem)
        ));
    }

    #[test]
    fn unterminated_descent_returns_border_minimum() {
        // x2 ≤ 5 does not terminate the descent along -x2; the solver returns
        // the best border candidate (attainment is presumed by the method).
        let p = QpProblem::new(
            cqf(&[1.0, 0.0, 0.0, 0.0], 2, &[0.0, 1.0], 0.0),
            None,
            vec![(Vector::from_row_slice(&[0.0, 1.0]), 5.0)],
        )
        .unwrap();
        let result = qp_solve(&p, &SolveOptions::default()).unwrap();
        assert_relative_eq!(result.l_star, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn subset_cap_is_enforced() {
        let ineq: Vec<_> = (0..3)
            .map(|i| (Vector::from_row_slice(&[1.0, i as f64]), 1.0))
            .collect();
        let p = QpProblem::new(cqf(&[2.0, 0.0, 0.0, 2.0], 2, &[0.0, 0.0], 0.0), None, ineq).unwrap();
        let opts = SolveOptions {
            subset_cap: 2,
            ..SolveOptions::default()
        };
        assert!(matches!(
            qp_solve(&p, &opts),
            Err(QpSolveError::SubsetCapExceeded { kappa: 3, cap: 2 })
        ));
    }

    #[test]
    fn parallel_matches_sequential() {
        let p = benchmark_pd_problem(4.0);
        let seq = qp_solve(&p, &SolveOptions::default()).unwrap();
        let par = qp_solve(
            &p,
            &SolveOptions {
                parallel: true,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn expedited_mode_stops_at_base() {
        // Singular reduced Hessian with feasible base particular optimum.
        let b = 1.0;
        let p = QpProblem::new(
            cqf(
                &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                3,
                &[0.0, 0.0, 0.0],
                0.0,
            ),
            Some((
                Matrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]),
                Vector::from_row_slice(&[b]),
            )),
            vec![(Vector::from_row_slice(&[1.0, 1.0, 0.0]), 4.0)],
        )
        .unwrap();
        let exp = qp_solve(
            &p,
            &SolveOptions {
                mode: Mode::Expedited,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert!(exp.expedited);
        let full = qp_solve(&p, &SolveOptions::default()).unwrap();
        assert!(!full.expedited);
        assert_relative_eq!(exp.l_star, full.l_star, epsilon = 1e-12);
        // The full enumeration keeps the expedited point among its optima.
        assert!(full
            .terminal_optima
            .iter()
            .any(|x| (x - &exp.terminal_optima[0]).norm() <= 1e-9));
    }
}
