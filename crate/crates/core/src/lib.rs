//! Closed-form analysis of convex quadratic equations (CQE) and the solvers
//! built on top of it.
//!
//! A CQE is `z' M z + k' z + c = 0` with `M` symmetric positive semidefinite.
//! This crate classifies its solvability from the rank of `M` and the range
//! membership of `k`, and parameterizes the full solution set in closed form —
//! the general-order analogue of the scalar quadratic formula. On that base it
//! provides:
//!
//! - pointwise reformulation of the Hamilton-Jacobi equation/inequality and the
//!   Hamilton-Jacobi-Bellman equation into CQEs in the value-function gradient
//!   ([`hj`]),
//! - closed-form solutions for unconstrained, equality-constrained, and
//!   extended quadratic programs ([`qp`]),
//! - a closed-form solver for general QPs with equality and inequality
//!   constraints that needs no feasible starting point ([`qp_solver`]),
//! - brute-force oracles used to verify the closed forms ([`oracle`]).
//!
//! All types are immutable value objects and all operations are pure
//! functions; everything is `Send + Sync`.

pub mod cqe;
pub mod hj;
pub mod linalg;
pub mod oracle;
pub mod qp;
pub mod qp_solver;
pub mod scenarios;

/// Dense column-major matrix of `f64`, the working representation for all
/// matrix data (`M`, `P`, `A`, `B`, ...).
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense vector of `f64`.
pub type Vector = nalgebra::DVector<f64>;

pub use cqe::{
    classify, evaluate, invert, parameterize, preimage_of_level, residual, CqeCase, CqeCaseTag,
    CqeError, CqeParams, CqeProblem, CqeSolutionSet, LevelPreimage,
};
pub use linalg::{
    householder_complement, in_range, nullspace_basis, pinv_sqrt, pseudoinverse, range_split,
    spectral_decompose, LinalgError, NullspaceBasis, RangeSplit, RankPolicy, SpectralData,
};
pub use qp::{
    equality_solve, extended_solve, kkt_residual, level_preimage, unconstrained_solve, CqfSpec,
    EqQpCategory, EqQpOutcome, ExtendedOutcome, QpError, UnconstrainedOutcome,
};
pub use qp_solver::{
    qp_solve, qp_solve_ineq_only, qp_solve_pd, CandidateKind, CandidateLedger, LedgerEntry, Mode,
    QpProblem, QpSolveError, QpSolveResult, SolveOptions, SubsetOutcome, SubsetReport,
};

/// Numerical tolerances shared by the solvers.
///
/// The closed forms in the source material treat rank, range membership, and
/// sign tests as exact; every threshold here is an engineering choice and can
/// be overridden per call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Rank truncation policy for spectral decompositions.
    pub rank: RankPolicy,
    /// Relative tolerance for range-membership tests (`k ∈ R(M)`).
    pub membership: f64,
    /// Relative tolerance for inequality-constraint feasibility tests.
    pub feasibility: f64,
    /// Relative tolerance under which a discriminant counts as zero
    /// (the unique-center boundary case).
    pub boundary: f64,
    /// Relative tolerance for accepting a vector as a CQE solution.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: RankPolicy::Default,
            membership: 1e-10,
            feasibility: 1e-9,
            boundary: 1e-10,
            residual: 1e-8,
        }
    }
}
