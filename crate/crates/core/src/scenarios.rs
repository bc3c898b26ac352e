//! Named, reproducible scenario instances used by the CLI and the acceptance
//! suite: the two QP benchmarks (a positive definite 2-D problem and its
//! singular 3-D extension) and a state sweep of the 2-D exponential regulator
//! checking that its known value-function gradient lies in the computed
//! solution sets.

use crate::cqe::{classify, invert, parameterize, residual, residual_scale, CqeCaseTag, CqeParams};
use crate::hj::{example_system, hje_to_cqe, HjError};
use crate::qp::CqfSpec;
use crate::qp_solver::{qp_solve, QpProblem, QpSolveError, QpSolveResult, SolveOptions};
use crate::{Matrix, Tolerances, Vector};

/// The 2-D benchmark QP: `P = [[4,1],[1,2]]`, `q = [-12,-10]`, `s = 0`,
/// inequality-only with borders `x1+x2 ≤ 4`, `-x1 ≤ 0`, `-x2 ≤ 0`.
pub fn benchmark_qp_pd() -> QpProblem {
    let f = CqfSpec::new(
        Matrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]),
        Vector::from_row_slice(&[-12.0, -10.0]),
        0.0,
    )
    .expect("benchmark data is valid");
    QpProblem::new(
        f,
        None,
        vec![
            (Vector::from_row_slice(&[1.0, 1.0]), 4.0),
            (Vector::from_row_slice(&[-1.0, 0.0]), 0.0),
            (Vector::from_row_slice(&[0.0, -1.0]), 0.0),
        ],
    )
    .expect("benchmark data is valid")
}

/// The singular 3-D extension: `P = diag(1,0,0)`, `q = 0`, equality
/// `x3 = b`, and the 2-D borders lifted into 3-D. Its optima form the
/// segment `{[0, t, b] : 0 ≤ t ≤ 4}` with terminal points `[0,0,b]` and
/// `[0,4,b]`.
pub fn benchmark_qp_singular(b: f64) -> QpProblem {
    let f = CqfSpec::new(
        Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        Vector::zeros(3),
        0.0,
    )
    .expect("benchmark data is valid");
    QpProblem::new(
        f,
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
    .expect("benchmark data is valid")
}

fn traced_options(parallel: bool) -> SolveOptions {
    SolveOptions {
        trace: true,
        parallel,
        ..SolveOptions::default()
    }
}

/// Solve the 2-D benchmark with a full per-subset trace.
pub fn run_table_1(parallel: bool) -> Result<(QpProblem, QpSolveResult), QpSolveError> {
    let p = benchmark_qp_pd();
    let result = qp_solve(&p, &traced_options(parallel))?;
    Ok((p, result))
}

/// Solve the singular 3-D benchmark at the given `b` with a full trace.
pub fn run_table_2(b: f64, parallel: bool) -> Result<(QpProblem, QpSolveResult), QpSolveError> {
    let p = benchmark_qp_singular(b);
    let result = qp_solve(&p, &traced_options(parallel))?;
    Ok((p, result))
}

/// The known value-function gradient of the 2-D exponential regulator:
/// `V_x = [2 x1 - x2² e^{-x1}, 2 x2 e^{-x1}]`.
pub fn known_gradient(x1: f64, x2: f64) -> Vector {
    let e = (-x1).exp();
    Vector::from_row_slice(&[2.0 * x1 - x2 * x2 * e, 2.0 * x2 * e])
}

/// Recovered parameters of the known gradient inside the HJE solution set.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepParams {
    /// `x2 = 0` case: gradient = `[eps1, ...]` with radius direction `rho2`;
    /// analytically `eps1 = 2 x1`, `rho2 = sgn(x1)`.
    InRange { eps1: f64, rho2: f64 },
    /// `x2 ≠ 0` case: level value of the range quadratic and the `tau`
    /// component; analytically `level = 2 x1 x2 - x2³ e^{-x1}`,
    /// `tau2 = 2 x2 e^{-x1}`.
    OutOfRange { level: f64, tau2: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x1: f64,
    pub x2: f64,
    pub case: CqeCaseTag,
    pub residual: f64,
    pub residual_scale: f64,
    pub params: SweepParams,
}

/// For each state, reformulate the regulator's HJE as a CQE, check the known
/// gradient solves it, and invert it back to its parameters.
pub fn gradient_sweep(states: &[(f64, f64)]) -> Result<Vec<SweepRow>, HjError> {
    let (sys, cost) = example_system();
    let tols = Tolerances::default();
    let mut rows = Vec::with_capacity(states.len());
    for &(x1, x2) in states {
        let x = Vector::from_row_slice(&[x1, x2]);
        let p = hje_to_cqe(&sys, &cost, &x)?;
        let case = classify(&p, &tols)?;
        let z = known_gradient(x1, x2);
        let res = residual(&p, &z)?;
        let scale = residual_scale(&p, &z);
        let set = parameterize(&p, &tols)?;
        let params = match invert(&set, &z)? {
            CqeParams::RankDefInRange { rho, eps } => SweepParams::InRange {
                eps1: eps[0],
                rho2: rho[1],
            },
            CqeParams::RankDefOutOfRange { w, tau, .. } => SweepParams::OutOfRange {
                level: set.cqf_value(&w),
                tau2: tau[1],
            },
            CqeParams::FullRank { .. } => {
                unreachable!("the regulator's control Gram has rank 1 < 2")
            }
        };
        rows.push(SweepRow {
            x1,
            x2,
            case: case.tag,
            residual: res,
            residual_scale: scale,
            params,
        });
    }
    Ok(rows)
}

/// Default sweep states: a small deterministic grid mixing `x2 = 0` and
/// `x2 ≠ 0`.
pub fn default_sweep_states() -> Vec<(f64, f64)> {
    let mut states = Vec::new();
    for i in 0..5 {
        let x1 = -2.0 + i as f64;
        if x1 != 0.0 {
            states.push((x1, 0.0));
        }
        for j in 1..4 {
            states.push((x1, -2.0 + 1.3 * j as f64));
        }
    }
    states
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn table_1_final_answer() {
        let (_, result) = run_table_1(false).unwrap();
        assert_relative_eq!(result.l_star, -28.5, epsilon = 1e-9);
        assert_eq!(result.optimality_subsets, vec![vec![1]]);
    }

    #[test]
    fn table_2_final_answer() {
        let (_, result) = run_table_2(1.0, false).unwrap();
        assert_relative_eq!(result.l_star, 0.0, epsilon = 1e-9);
        assert_eq!(result.terminal_optima.len(), 2);
    }

    #[test]
    fn sweep_recovers_analytic_parameters() {
        let rows = gradient_sweep(&[(1.5, 0.0), (1.0, 2.0)]).unwrap();
        match &rows[0].params {
            SweepParams::InRange { eps1, rho2 } => {
                assert_relative_eq!(*eps1, 3.0, epsilon = 1e-10);
                assert_relative_eq!(*rho2, 1.0, epsilon = 1e-10);
            }
            other => panic!("expected in-range params, got {other:?}"),
        }
        match &rows[1].params {
            SweepParams::OutOfRange { level, tau2 } => {
                let e = (-1.0_f64).exp();
                assert_relative_eq!(*level, 4.0 - 8.0 * e, epsilon = 1e-10);
                assert_relative_eq!(*tau2, 4.0 * e, epsilon = 1e-10);
            }
            other => panic!("expected out-of-range params, got {other:?}"),
        }
        assert!(rows.iter().all(|r| r.residual <= 1e-8 * r.residual_scale));
    }
}
