//! Solvability classification and closed-form solution sets for the convex
//! quadratic equation (CQE) `z' M z + k' z + c = 0` with `M` symmetric PSD.
//!
//! The case split is on `rank(M)` and on whether `k` lies in the range of `M`:
//!
//! - full rank: solvable iff `k' M⁻¹ k ≥ 4c`, a sphere image under `M^{-1/2}`
//!   around `-M⁻¹ k / 2`;
//! - rank deficient, `k ∈ R(M)`: same discriminant with `M†`, plus free motion
//!   in `N(M)`;
//! - rank deficient, `k ∉ R(M)`: always solvable; the solution moves along
//!   `k_{M⊥}` with a coefficient given by the value of the convex quadratic
//!   function `F_w` at the solution's own range component, plus free motion in
//!   `N(M) ∩ N(k')`.
//!
//! Each case's parameter-solution mapping is a bijection, which is what
//! [`invert`] exploits: every solution decomposes uniquely into its parameters.

use crate::linalg::{
    self, pinv_sqrt, range_split, spectral_decompose, LinalgError, RangeSplit, SpectralData,
};
use crate::{Matrix, Tolerances, Vector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CqeError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("CQE is unsolvable: discriminant {discriminant:.6e} is negative")]
    UnsolvableCqe { discriminant: f64 },
    #[error("parameter {name} is not unit length: |norm - 1| = {deviation:.3e}")]
    NonUnitParam { name: &'static str, deviation: f64 },
    #[error("parameter {name} lies outside its subspace: deviation {deviation:.3e}")]
    ParamOutsideSubspace { name: &'static str, deviation: f64 },
    #[error("params belong to case {params}, solution set is case {case}")]
    WrongParamCase {
        params: &'static str,
        case: &'static str,
    },
    #[error("w and tau lie on different level sets of F_w: {w_level} vs {tau_level}")]
    LevelMismatch { w_level: f64, tau_level: f64 },
    #[error("vector is not a solution: residual {residual:.3e} exceeds {tol:.3e}")]
    NotASolution { residual: f64, tol: f64 },
    #[error("level {level} is below the minimum {minimum} of the quadratic")]
    LevelBelowMinimum { level: f64, minimum: f64 },
    #[error("preimage at level {level} is empty: the quadratic is constant {constant} on its domain")]
    EmptyPreimage { level: f64, constant: f64 },
}

/// The triple `(M, k, c)` of a CQE `z' M z + k' z + c = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqeProblem {
    m: Matrix,
    k: Vector,
    c: f64,
}

impl CqeProblem {
    /// Validates shapes and finiteness; PSD is checked at classification time.
    pub fn new(m: Matrix, k: Vector, c: f64) -> Result<Self, CqeError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            }
            .into());
        }
        if k.len() != m.nrows() {
            return Err(CqeError::DimensionMismatch {
                expected: m.nrows(),
                got: k.len(),
            });
        }
        if !m.iter().all(|x| x.is_finite()) || !k.iter().all(|x| x.is_finite()) || !c.is_finite() {
            return Err(LinalgError::NonFinite.into());
        }
        Ok(Self { m, k, c })
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }
    pub fn m(&self) -> &Matrix {
        &self.m
    }
    pub fn k(&self) -> &Vector {
        &self.k
    }
    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Which branch of the case split a CQE falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqeCaseTag {
    FullRank,
    RankDefInRange,
    RankDefOutOfRange,
    Unsolvable,
}

/// Classification outcome: the case tag, the discriminant `k' M† k / 4 - c`
/// (with `M⁻¹` in the full-rank case), and whether the discriminant is within
/// tolerance of zero (the unique-center boundary).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqeCase {
    pub tag: CqeCaseTag,
    pub discriminant: f64,
    pub boundary: bool,
}

/// Evaluable description of the full solution set of a solvable CQE.
#[derive(Debug, Clone)]
pub struct CqeSolutionSet {
    problem: CqeProblem,
    case: CqeCase,
    sd: SpectralData,
    center: Vector,
    radius: f64,
    /// `k = k_M + k_{M⊥}` split, present in the out-of-range case.
    split: Option<RangeSplit>,
    half_pinv: Matrix,
    tols: Tolerances,
}

/// Case-dependent free parameters of a solution set.
///
/// - `FullRank`: unit `v` (zero at the boundary);
/// - `RankDefInRange`: unit `rho ∈ R(M)` (zero at the boundary) and
///   `eps ∈ N(M)`;
/// - `RankDefOutOfRange`: `w, tau ∈ R(M)` on a common level set of `F_w`
///   (canonically `w = tau`), and `phi ∈ N(M) ∩ N(k')`.
#[derive(Debug, Clone, PartialEq)]
pub enum CqeParams {
    FullRank { v: Vector },
    RankDefInRange { rho: Vector, eps: Vector },
    RankDefOutOfRange { w: Vector, phi: Vector, tau: Vector },
}

impl CqeParams {
    fn case_name(&self) -> &'static str {
        match self {
            CqeParams::FullRank { .. } => "FullRank",
            CqeParams::RankDefInRange { .. } => "RankDefInRange",
            CqeParams::RankDefOutOfRange { .. } => "RankDefOutOfRange",
        }
    }
}

/// `|z' M z + k' z + c|`.
pub fn residual(p: &CqeProblem, z: &Vector) -> Result<f64, CqeError> {
    if z.len() != p.dim() {
        return Err(CqeError::DimensionMismatch {
            expected: p.dim(),
            got: z.len(),
        });
    }
    Ok((z.dot(&(&p.m * z)) + p.k.dot(z) + p.c).abs())
}

/// Scale against which residuals are measured:
/// `max(1, ‖M‖‖z‖², ‖k‖‖z‖, |c|)`.
pub fn residual_scale(p: &CqeProblem, z: &Vector) -> f64 {
    let zn = z.norm();
    (p.m.norm() * zn * zn)
        .max(p.k.norm() * zn)
        .max(p.c.abs())
        .max(1.0)
}

fn discriminant_parts(p: &CqeProblem, sd: &SpectralData) -> (f64, f64, bool) {
    let kmk = p.k.dot(&sd.apply_pinv(&p.k));
    let d = kmk / 4.0 - p.c;
    let scale = kmk.abs().max((4.0 * p.c).abs()).max(1.0);
    (d, scale, d.abs() <= 1e-10 * scale)
}

/// Classify solvability per the rank/range case split.
pub fn classify(p: &CqeProblem, tols: &Tolerances) -> Result<CqeCase, CqeError> {
    let sd = spectral_decompose(&p.m, tols.rank)?;
    Ok(classify_with_sd(p, &sd, tols))
}

fn classify_with_sd(p: &CqeProblem, sd: &SpectralData, tols: &Tolerances) -> CqeCase {
    let (d, scale, boundary) = discriminant_parts(p, sd);
    let solvable_quadrant = d >= -tols.boundary * scale;
    if sd.is_full_rank() {
        let tag = if solvable_quadrant {
            CqeCaseTag::FullRank
        } else {
            CqeCaseTag::Unsolvable
        };
        return CqeCase {
            tag,
            discriminant: d,
            boundary: boundary && solvable_quadrant,
        };
    }
    let in_range = linalg::in_range(&p.k, sd, tols.membership).expect("dims checked");
    if in_range {
        // A positive radius needs a unit direction inside R(M); when M = 0
        // the range is trivial and only the boundary case is consistent.
        let tag = if solvable_quadrant && (sd.rank > 0 || boundary) {
            CqeCaseTag::RankDefInRange
        } else {
            CqeCaseTag::Unsolvable
        };
        CqeCase {
            tag,
            discriminant: d,
            boundary: boundary && tag == CqeCaseTag::RankDefInRange,
        }
    } else {
        CqeCase {
            tag: CqeCaseTag::RankDefOutOfRange,
            discriminant: d,
            boundary: false,
        }
    }
}

/// Build the closed-form solution set of a solvable CQE.
pub fn parameterize(p: &CqeProblem, tols: &Tolerances) -> Result<CqeSolutionSet, CqeError> {
    let sd = spectral_decompose(&p.m, tols.rank)?;
    let case = classify_with_sd(p, &sd, tols);
    if case.tag == CqeCaseTag::Unsolvable {
        return Err(CqeError::UnsolvableCqe {
            discriminant: case.discriminant,
        });
    }
    let half_pinv = pinv_sqrt(&sd);
    let (center, radius, split) = match case.tag {
        CqeCaseTag::FullRank | CqeCaseTag::RankDefInRange => {
            let center = -sd.apply_pinv(&p.k) * 0.5;
            let radius = if case.boundary {
                0.0
            } else {
                case.discriminant.max(0.0).sqrt()
            };
            (center, radius, None)
        }
        CqeCaseTag::RankDefOutOfRange => {
            let split = range_split(&p.k, &sd)?;
            // Particular point: w = tau = 0, phi = 0.
            let center = &split.out_of_range * (-p.c / (split.out_norm * split.out_norm));
            (center, 0.0, Some(split))
        }
        CqeCaseTag::Unsolvable => unreachable!(),
    };
    Ok(CqeSolutionSet {
        problem: p.clone(),
        case,
        sd,
        center,
        radius,
        split,
        half_pinv,
        tols: *tols,
    })
}

impl CqeSolutionSet {
    pub fn case(&self) -> &CqeCase {
        &self.case
    }
    pub fn spectral(&self) -> &SpectralData {
        &self.sd
    }
    pub fn center(&self) -> &Vector {
        &self.center
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn split(&self) -> Option<&RangeSplit> {
        self.split.as_ref()
    }
    pub fn problem(&self) -> &CqeProblem {
        &self.problem
    }

    /// The convex quadratic `F_w(w) = w' M w + k_M' w + c` of the out-of-range
    /// case, evaluated on `R(M)`.
    pub fn cqf_value(&self, w: &Vector) -> f64 {
        let k_m = match &self.split {
            Some(split) => &split.in_range,
            None => &self.problem.k,
        };
        w.dot(&(&self.problem.m * w)) + k_m.dot(w) + self.problem.c
    }
}

fn check_subspace(
    v: &Vector,
    deviation: f64,
    name: &'static str,
    tol: f64,
) -> Result<(), CqeError> {
    if deviation > tol * v.norm().max(1.0) {
        return Err(CqeError::ParamOutsideSubspace { name, deviation });
    }
    Ok(())
}

/// Unit-length check with renormalization: vectors within 1e-8 of unit length
/// are renormalized, anything else is rejected. `allow_zero` admits the zero
/// vector (the boundary case where the radius term vanishes).
fn normalize_unit(v: &Vector, name: &'static str, allow_zero: bool) -> Result<Vector, CqeError> {
    let norm = v.norm();
    if allow_zero && norm <= 1e-8 {
        return Ok(Vector::zeros(v.len()));
    }
    let deviation = (norm - 1.0).abs();
    if deviation > 1e-8 {
        return Err(CqeError::NonUnitParam { name, deviation });
    }
    Ok(v / norm)
}

/// Evaluate the solution set at given parameters, returning a solution `z`.
pub fn evaluate(s: &CqeSolutionSet, params: &CqeParams) -> Result<Vector, CqeError> {
    let n = s.problem.dim();
    let mtol = s.tols.membership;
    let case_name = match s.case.tag {
        CqeCaseTag::FullRank => "FullRank",
        CqeCaseTag::RankDefInRange => "RankDefInRange",
        CqeCaseTag::RankDefOutOfRange => "RankDefOutOfRange",
        CqeCaseTag::Unsolvable => unreachable!("parameterize rejects unsolvable problems"),
    };
    let z = match (s.case.tag, params) {
        (CqeCaseTag::FullRank, CqeParams::FullRank { v }) => {
            if v.len() != n {
                return Err(CqeError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            let v = normalize_unit(v, "v", s.case.boundary)?;
            &s.center + &s.half_pinv * v * s.radius
        }
        (CqeCaseTag::RankDefInRange, CqeParams::RankDefInRange { rho, eps }) => {
            if rho.len() != n || eps.len() != n {
                return Err(CqeError::DimensionMismatch {
                    expected: n,
                    got: rho.len().min(eps.len()),
                });
            }
            let rho = normalize_unit(rho, "rho", s.case.boundary)?;
            check_subspace(&rho, s.sd.project_null(&rho).norm(), "rho", mtol)?;
            check_subspace(eps, s.sd.project_range(eps).norm(), "eps", mtol)?;
            &s.center + &s.half_pinv * rho * s.radius + eps
        }
        (CqeCaseTag::RankDefOutOfRange, CqeParams::RankDefOutOfRange { w, phi, tau }) => {
            if w.len() != n || phi.len() != n || tau.len() != n {
                return Err(CqeError::DimensionMismatch { expected: n, got: w.len() });
            }
            check_subspace(w, s.sd.project_null(w).norm(), "w", mtol)?;
            check_subspace(tau, s.sd.project_null(tau).norm(), "tau", mtol)?;
            check_subspace(phi, s.sd.project_range(phi).norm(), "phi", mtol)?;
            check_subspace(phi, s.problem.k.dot(phi).abs() / s.problem.k.norm().max(1.0), "phi", mtol)?;
            let w_level = s.cqf_value(w);
            let tau_level = s.cqf_value(tau);
            // The coefficient of k_{M⊥} must be the CQF value at the
            // solution's own range component; w only names that level.
            let level_scale = w_level.abs().max(tau_level.abs()).max(1.0);
            if (w_level - tau_level).abs() > s.tols.residual * level_scale {
                return Err(CqeError::LevelMismatch { w_level, tau_level });
            }
            let split = s.split.as_ref().expect("out-of-range case carries the split");
            let coeff = -tau_level / (split.out_norm * split.out_norm);
            &split.out_of_range * coeff + phi + tau
        }
        (_, p) => {
            return Err(CqeError::WrongParamCase {
                params: p.case_name(),
                case: case_name,
            })
        }
    };
    Ok(z)
}

/// Recover the unique parameters of a solution (the parameter-solution mapping
/// is a bijection case by case).
pub fn invert(s: &CqeSolutionSet, z: &Vector) -> Result<CqeParams, CqeError> {
    let r = residual(&s.problem, z)?;
    let tol = s.tols.residual * residual_scale(&s.problem, z);
    if r > tol {
        return Err(CqeError::NotASolution { residual: r, tol });
    }
    match s.case.tag {
        CqeCaseTag::FullRank => {
            let v = if s.case.boundary {
                Vector::zeros(z.len())
            } else {
                let raw = s.sd.sqrt() * (z - &s.center) / s.radius;
                normalize_unit(&raw, "v", true)?
            };
            Ok(CqeParams::FullRank { v })
        }
        CqeCaseTag::RankDefInRange => {
            let eps = s.sd.project_null(z);
            let rho = if s.case.boundary {
                Vector::zeros(z.len())
            } else {
                let raw = s.sd.sqrt() * (s.sd.project_range(z) - &s.center) / s.radius;
                normalize_unit(&raw, "rho", true)?
            };
            Ok(CqeParams::RankDefInRange { rho, eps })
        }
        CqeCaseTag::RankDefOutOfRange => {
            let split = s.split.as_ref().expect("out-of-range case carries the split");
            let tau = s.sd.project_range(z);
            let level = -z.dot(&split.out_of_range);
            let phi =
                s.sd.project_null(z) + &split.out_of_range * (level / (split.out_norm * split.out_norm));
            Ok(CqeParams::RankDefOutOfRange {
                w: tau.clone(),
                phi,
                tau,
            })
        }
        CqeCaseTag::Unsolvable => unreachable!("parameterize rejects unsolvable problems"),
    }
}

/// Preimage of a convex quadratic `F(w) = w' M w + k_M' w + c` restricted to
/// `R(M)`, at a given level:
/// `w = -M† k_M / 2 + sqrt(k_M' M† k_M / 4 - c + level) · M^{†/2} · ρ̌` over
/// unit `ρ̌ ∈ R(M)`.
#[derive(Debug, Clone)]
pub struct LevelPreimage {
    sd: SpectralData,
    center: Vector,
    radius: f64,
    half_pinv: Matrix,
    membership_tol: f64,
}

impl LevelPreimage {
    pub fn center(&self) -> &Vector {
        &self.center
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn spectral(&self) -> &SpectralData {
        &self.sd
    }

    /// Evaluate at a unit direction `ρ̌ ∈ R(M)` (zero admitted when the level
    /// sits at the minimum and the radius vanishes).
    pub fn evaluate(&self, rho_check: &Vector) -> Result<Vector, CqeError> {
        if rho_check.len() != self.center.len() {
            return Err(CqeError::DimensionMismatch {
                expected: self.center.len(),
                got: rho_check.len(),
            });
        }
        let rho = normalize_unit(rho_check, "rho_check", self.radius == 0.0)?;
        check_subspace(
            &rho,
            self.sd.project_null(&rho).norm(),
            "rho_check",
            self.membership_tol,
        )?;
        Ok(&self.center + &self.half_pinv * rho * self.radius)
    }

    /// The two preimage points of a one-dimensional range (`ρ̌ = ±u1`),
    /// coincident at the minimum level. `None` when `rank(M) ≠ 1`.
    pub fn roots_1d(&self) -> Option<(Vector, Vector)> {
        if self.sd.rank != 1 {
            return None;
        }
        let dir = self.sd.u1.column(0).into_owned();
        let step = &self.half_pinv * dir * self.radius;
        Some((&self.center + &step, &self.center - &step))
    }
}

/// Parameterize the preimage of the level set `F_w = level`, where the problem
/// triple is read as the CQF `F_w(w) = w' M w + k_M' w + c` over `R(M)`.
pub fn preimage_of_level(
    p: &CqeProblem,
    level: f64,
    tols: &Tolerances,
) -> Result<LevelPreimage, CqeError> {
    let sd = spectral_decompose(&p.m, tols.rank)?;
    // M† k = M† k_M, so the full k can be used throughout.
    let kmk = p.k.dot(&sd.apply_pinv(&p.k));
    let radicand = kmk / 4.0 - p.c + level;
    let scale = kmk.abs().max(p.c.abs()).max(level.abs()).max(1.0);
    if radicand < -tols.boundary * scale {
        return Err(CqeError::LevelBelowMinimum {
            level,
            minimum: p.c - kmk / 4.0,
        });
    }
    let radius = radicand.max(0.0).sqrt();
    if sd.rank == 0 && radius > tols.boundary * scale {
        // F_w is the constant c on R(M) = {0}; no other level is attained.
        return Err(CqeError::EmptyPreimage {
            level,
            constant: p.c,
        });
    }
    let center = -sd.apply_pinv(&p.k) * 0.5;
    let half_pinv = pinv_sqrt(&sd);
    Ok(LevelPreimage {
        sd,
        center,
        radius,
        half_pinv,
        membership_tol: tols.membership,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn problem(m: &[f64], n: usize, k: &[f64], c: f64) -> CqeProblem {
        CqeProblem::new(
            Matrix::from_row_slice(n, n, m),
            Vector::from_row_slice(k),
            c,
        )
        .unwrap()
    }

    #[test]
    fn classify_identity_origin() {
        let p = problem(&[1.0, 0.0, 0.0, 1.0], 2, &[0.0, 0.0], 0.0);
        let case = classify(&p, &tols()).unwrap();
        assert_eq!(case.tag, CqeCaseTag::FullRank);
        assert_eq!(case.discriminant, 0.0);
        assert!(case.boundary);
        // The only root is z = 0.
        let s = parameterize(&p, &tols()).unwrap();
        let z = evaluate(&s, &CqeParams::FullRank { v: Vector::zeros(2) }).unwrap();
        assert_relative_eq!(z.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn classify_forced_out_of_range() {
        for c in [-3.0, 0.0, 2.0] {
            let p = problem(&[1.0, 0.0, 0.0, 0.0], 2, &[0.0, 1.0], c);
            let case = classify(&p, &tols()).unwrap();
            assert_eq!(case.tag, CqeCaseTag::RankDefOutOfRange);
        }
    }

    #[test]
    fn classify_unsolvable_matches_scalar_discriminant() {
        // z1² + z1 + 1 = 0 has negative discriminant; the lifted 2-D problem
        // with M = diag(1,0), k = e1, c = 1 is likewise unsolvable.
        let p = problem(&[1.0, 0.0, 0.0, 0.0], 2, &[1.0, 0.0], 1.0);
        let case = classify(&p, &tols()).unwrap();
        assert_eq!(case.tag, CqeCaseTag::Unsolvable);
        assert!(case.discriminant < 0.0);
        assert!(1.0_f64 - 4.0 < 0.0);
    }

    #[test]
    fn zero_matrix_zero_k_solvable_only_at_zero_c() {
        let solvable = problem(&[0.0; 4], 2, &[0.0, 0.0], 0.0);
        assert_eq!(
            classify(&solvable, &tols()).unwrap().tag,
            CqeCaseTag::RankDefInRange
        );
        // c != 0 of either sign has no solution even though the discriminant
        // -c may be positive: there is no unit direction in R(0).
        for c in [1.0, -1.0] {
            let p = problem(&[0.0; 4], 2, &[0.0, 0.0], c);
            assert_eq!(classify(&p, &tols()).unwrap().tag, CqeCaseTag::Unsolvable);
        }
    }

    #[test]
    fn scalar_quadratic_formula() {
        // m = 1, k = 0, c = -1: roots ±1.
        let p = problem(&[1.0], 1, &[0.0], -1.0);
        let s = parameterize(&p, &tols()).unwrap();
        assert_relative_eq!(s.center()[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(s.radius(), 1.0, epsilon = 1e-14);
        let plus = evaluate(&s, &CqeParams::FullRank { v: Vector::from_row_slice(&[1.0]) }).unwrap();
        let minus = evaluate(&s, &CqeParams::FullRank { v: Vector::from_row_slice(&[-1.0]) }).unwrap();
        assert_relative_eq!(plus[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(minus[0], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn evaluate_identity_sphere() {
        let p = problem(&[1.0, 0.0, 0.0, 1.0], 2, &[0.0, 0.0], -1.0);
        let s = parameterize(&p, &tols()).unwrap();
        let z = evaluate(&s, &CqeParams::FullRank { v: Vector::from_row_slice(&[1.0, 0.0]) }).unwrap();
        assert_relative_eq!(z[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(z[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn kernel_is_solution_set_when_k_and_c_vanish() {
        // With k = 0, c = 0 and singular M, the solutions are exactly N(M).
        let p = problem(&[1.0, 0.0, 0.0, 0.0], 2, &[0.0, 0.0], 0.0);
        let s = parameterize(&p, &tols()).unwrap();
        assert!(s.case().boundary);
        let eps = Vector::from_row_slice(&[0.0, -3.7]);
        let z = evaluate(
            &s,
            &CqeParams::RankDefInRange { rho: Vector::zeros(2), eps: eps.clone() },
        )
        .unwrap();
        assert_relative_eq!((z - eps).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_wrong_case_params() {
        let p = problem(&[1.0], 1, &[0.0], -1.0);
        let s = parameterize(&p, &tols()).unwrap();
        let err = evaluate(
            &s,
            &CqeParams::RankDefInRange { rho: Vector::zeros(1), eps: Vector::zeros(1) },
        );
        assert!(matches!(err, Err(CqeError::WrongParamCase { .. })));
    }

    #[test]
    fn rejects_non_unit_and_off_subspace_params() {
        let p = problem(&[1.0, 0.0, 0.0, 1.0], 2, &[0.0, 0.0], -1.0);
        let s = parameterize(&p, &tols()).unwrap();
        let err = evaluate(&s, &CqeParams::FullRank { v: Vector::from_row_slice(&[0.5, 0.0]) });
        assert!(matches!(err, Err(CqeError::NonUnitParam { .. })));

        let pd = problem(&[1.0, 0.0, 0.0, 0.0], 2, &[1.0, 0.0], -1.0);
        let sd = parameterize(&pd, &tols()).unwrap();
        let err = evaluate(
            &sd,
            &CqeParams::RankDefInRange {
                rho: Vector::from_row_slice(&[0.0, 1.0]),
                eps: Vector::zeros(2),
            },
        );
        assert!(matches!(err, Err(CqeError::ParamOutsideSubspace { .. })));
    }

    #[test]
    fn out_of_range_level_mismatch_is_rejected() {
        let p = problem(&[0.0, 0.0, 0.0, 0.25], 2, &[-1.0, -0.5], -1.0);
        let s = parameterize(&p, &tols()).unwrap();
        let tau = Vector::from_row_slice(&[0.0, 2.0]);
        let w = Vector::from_row_slice(&[0.0, 1.0]);
        let err = evaluate(
            &s,
            &CqeParams::RankDefOutOfRange { w, phi: Vector::zeros(2), tau: tau.clone() },
        );
        assert!(matches!(err, Err(CqeError::LevelMismatch { .. })));
        // With w = tau the evaluation solves the CQE.
        let z = evaluate(
            &s,
            &CqeParams::RankDefOutOfRange { w: tau.clone(), phi: Vector::zeros(2), tau },
        )
        .unwrap();
        assert!(residual(&p, &z).unwrap() <= 1e-10);
    }

    #[test]
    fn invert_boundary_full_rank() {
        let p = problem(&[1.0, 0.0, 0.0, 1.0], 2, &[2.0, 0.0], 1.0);
        let case = classify(&p, &tols()).unwrap();
        assert!(case.boundary);
        let s = parameterize(&p, &tols()).unwrap();
        let z = s.center().clone();
        match invert(&s, &z).unwrap() {
            CqeParams::FullRank { v } => assert_eq!(v, Vector::zeros(2)),
            other => panic!("unexpected params {other:?}"),
        }
    }

    #[test]
    fn invert_rejects_non_solution() {
        let p = problem(&[1.0], 1, &[0.0], -1.0);
        let s = parameterize(&p, &tols()).unwrap();
        let err = invert(&s, &Vector::from_row_slice(&[0.3]));
        assert!(matches!(err, Err(CqeError::NotASolution { .. })));
    }

    #[test]
    fn residual_trivial_values() {
        let p = problem(&[1.0, 0.0, 0.0, 1.0], 2, &[0.0, 0.0], 0.0);
        assert_eq!(residual(&p, &Vector::zeros(2)).unwrap(), 0.0);
        let p5 = problem(&[1.0, 0.0, 0.0, 1.0], 2, &[0.0, 0.0], 5.0);
        assert_eq!(residual(&p5, &Vector::zeros(2)).unwrap(), 5.0);
    }

    #[test]
    fn preimage_at_minimum_is_unique_center() {
        // F(w) = w'Mw + k'w + c over R(M) with M = diag(1, 0), k = [2, 0].
        let p = problem(&[1.0, 0.0, 0.0, 0.0], 2, &[2.0, 0.0], 0.0);
        // minimum of F on R(M): at w = -1, value -1.
        let pre = preimage_of_level(&p, -1.0, &tols()).unwrap();
        assert_relative_eq!(pre.radius(), 0.0, epsilon = 1e-12);
        let w = pre.evaluate(&Vector::zeros(2)).unwrap();
        assert_relative_eq!(w[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(w[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn preimage_below_minimum_errors() {
        let p = problem(&[1.0, 0.0, 0.0, 0.0], 2, &[2.0, 0.0], 0.0);
        let err = preimage_of_level(&p, -1.001, &tols());
        assert!(matches!(err, Err(CqeError::LevelBelowMinimum { .. })));
    }

    #[test]
    fn preimage_roots_match_quadratic_formula() {
        // F(w) = w² + 2w over R(M) = span{e1}; level 3 has roots 1 and -3.
        let p = problem(&[1.0, 0.0, 0.0, 0.0], 2, &[2.0, 0.0], 0.0);
        let pre = preimage_of_level(&p, 3.0, &tols()).unwrap();
        let (a, b) = pre.roots_1d().unwrap();
        let mut roots = [a[0], b[0]];
        roots.sort_by(f64::total_cmp);
        assert_relative_eq!(roots[0], -3.0, epsilon = 1e-12);
        assert_relative_eq!(roots[1], 1.0, epsilon = 1e-12);
    }
}
