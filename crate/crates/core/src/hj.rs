//! Pointwise reformulation of the Hamilton-Jacobi equation (HJE), inequality
//! (HJI), and Hamilton-Jacobi-Bellman equation (HJBE) as CQEs in the gradient
//! of the value function.
//!
//! For an affine-in-input system `ẋ = f(x) + B(x)u` with running cost
//! `(L + u'Ru)/2`, the HJE at a fixed state is the CQE
//! `z'(BR⁻¹B'/2)z - f'z - L/2 = 0` in `z = V_x'`. No PDE is solved anywhere:
//! each bridge is a pointwise algebraic map from `(f, B, L, R)` at `x` to a
//! `CqeProblem`, and the HJBE variant additionally exploits the structure of
//! its lifted `(n+1)`-dimensional Hessian, which is always rank deficient.

use crate::cqe::{CqeError, CqeParams, CqeProblem};
use crate::linalg::{spectral_decompose, LinalgError, SpectralData};
use crate::{Matrix, Tolerances, Vector};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HjError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Cqe(#[from] CqeError),
    #[error("R(x) is not symmetric positive definite")]
    RNotPositiveDefinite,
    #[error("HJI slack must be nonpositive, got {y}")]
    PositiveSlack { y: f64 },
    #[error("f(0) must vanish, got norm {norm:.3e}")]
    OriginNotEquilibrium { norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type StateFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type InputMapFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type WeightFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// Affine-in-input dynamics `ẋ = f(x) + B(x)u` with `f(0) = 0`.
///
/// Evaluators must be pure; the check `f(0) = 0` runs at registration.
#[derive(Clone)]
pub struct AffineSystem {
    n: usize,
    p: usize,
    f: StateFn,
    b: InputMapFn,
}

impl AffineSystem {
    pub fn new(n: usize, p: usize, f: StateFn, b: InputMapFn) -> Result<Self, HjError> {
        let origin = Vector::zeros(n);
        let f0 = f(&origin);
        if f0.len() != n {
            return Err(HjError::DimensionMismatch {
                expected: n,
                got: f0.len(),
            });
        }
        let norm = f0.norm();
        if norm > 1e-12 {
            return Err(HjError::OriginNotEquilibrium { norm });
        }
        let b0 = b(&origin);
        if b0.nrows() != n || b0.ncols() != p {
            return Err(HjError::DimensionMismatch {
                expected: n * p,
                got: b0.nrows() * b0.ncols(),
            });
        }
        Ok(Self { n, p, f, b })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }
    pub fn input_dim(&self) -> usize {
        self.p
    }
    pub fn f(&self, x: &Vector) -> Vector {
        (self.f)(x)
    }
    pub fn b(&self, x: &Vector) -> Matrix {
        (self.b)(x)
    }
}

impl fmt::Debug for AffineSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AffineSystem")
            .field("n", &self.n)
            .field("p", &self.p)
            .finish_non_exhaustive()
    }
}

/// State cost `L(x)` and input weight `R(x)` (symmetric positive definite).
#[derive(Clone)]
pub struct CostWeights {
    l: ScalarFn,
    r: WeightFn,
}

impl CostWeights {
    pub fn new(l: ScalarFn, r: WeightFn) -> Self {
        Self { l, r }
    }
    pub fn l(&self, x: &Vector) -> f64 {
        (self.l)(x)
    }
    pub fn r(&self, x: &Vector) -> Matrix {
        (self.r)(x)
    }
}

impl fmt::Debug for CostWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostWeights").finish_non_exhaustive()
    }
}

/// `B R⁻¹ B'` with the positive-definite solve done by Cholesky; not a
/// pseudoinverse, PD is an assumption on `R`.
fn control_gram(sys: &AffineSystem, cost: &CostWeights, x: &Vector) -> Result<Matrix, HjError> {
    let b = sys.b(x);
    let r = cost.r(x);
    if r.nrows() != sys.p || r.ncols() != sys.p {
        return Err(HjError::DimensionMismatch {
            expected: sys.p,
            got: r.nrows(),
        });
    }
    let asym = (&r - r.transpose()).norm();
    if asym > 1e-10 * r.norm().max(1.0) {
        return Err(HjError::RNotPositiveDefinite);
    }
    let chol = ((&r + r.transpose()) * 0.5)
        .cholesky()
        .ok_or(HjError::RNotPositiveDefinite)?;
    let rinv_bt = chol.solve(&b.transpose());
    let g = &b * rinv_bt;
    Ok((&g + g.transpose()) * 0.5)
}

/// HJE at state `x` as a CQE in `z = V_x'`:
/// `M = B R⁻¹ B' / 2`, `k = -f`, `c = -L/2`.
pub fn hje_to_cqe(
    sys: &AffineSystem,
    cost: &CostWeights,
    x: &Vector,
) -> Result<CqeProblem, HjError> {
    hji_to_cqe(sys, cost, x, 0.0)
}

/// HJI at state `x` with slack `y ≤ 0`: same as the HJE with `c = -L/2 + y`.
pub fn hji_to_cqe(
    sys: &AffineSystem,
    cost: &CostWeights,
    x: &Vector,
    y: f64,
) -> Result<CqeProblem, HjError> {
    if y > 0.0 {
        return Err(HjError::PositiveSlack { y });
    }
    if x.len() != sys.n {
        return Err(HjError::DimensionMismatch {
            expected: sys.n,
            got: x.len(),
        });
    }
    let g = control_gram(sys, cost, x)?;
    let f = sys.f(x);
    let c = -cost.l(x) / 2.0 + y;
    Ok(CqeProblem::new(g * 0.5, -f, c)?)
}

/// Optimal feedback `u = -R⁻¹ B' V_x'` for a candidate gradient row `V_x`.
pub fn optimal_control(
    vx: &Vector,
    sys: &AffineSystem,
    cost: &CostWeights,
    x: &Vector,
) -> Result<Vector, HjError> {
    if vx.len() != sys.n {
        return Err(HjError::DimensionMismatch {
            expected: sys.n,
            got: vx.len(),
        });
    }
    let r = cost.r(x);
    let chol = ((&r + r.transpose()) * 0.5)
        .cholesky()
        .ok_or(HjError::RNotPositiveDefinite)?;
    let bt_vx = sys.b(x).transpose() * vx;
    Ok(-chol.solve(&bt_vx))
}

/// HJBE at state `x` as the lifted `(n+1)`-dimensional CQE in
/// `z = [V̂_x, V̂_t]'`: `M̄ = diag(B R⁻¹ B'/2, 0)`, `k̄ = -[f', 1]'`,
/// `c = -L/2`. `M̄` is always rank deficient and `k̄ ∉ R(M̄)`, so this CQE is
/// always solvable.
pub fn hjbe_cqe(
    sys: &AffineSystem,
    cost: &CostWeights,
    x: &Vector,
) -> Result<CqeProblem, HjError> {
    if x.len() != sys.n {
        return Err(HjError::DimensionMismatch {
            expected: sys.n,
            got: x.len(),
        });
    }
    let g = control_gram(sys, cost, x)?;
    let n = sys.n;
    let mut m_bar = Matrix::zeros(n + 1, n + 1);
    m_bar.view_mut((0, 0), (n, n)).copy_from(&(g * 0.5));
    let f = sys.f(x);
    let mut k_bar = Vector::zeros(n + 1);
    for i in 0..n {
        k_bar[i] = -f[i];
    }
    k_bar[n] = -1.0;
    Ok(CqeProblem::new(m_bar, k_bar, -cost.l(x) / 2.0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HjbeCaseTag {
    /// `rank(B R⁻¹ B') = n`: the time slot absorbs the quadratic value,
    /// `V̄ = [τ̄1', F̄(τ̄1)]`.
    FullRank,
    /// `rank(B R⁻¹ B') < n`: the solution also moves along the out-of-range
    /// direction `[Û2 Û2' f, 1]'` and in the extra null freedom `φ̄'`.
    RankDeficient,
}

/// Closed-form solution set of the HJBE-CQE at a fixed state, reduced to
/// operations in the original n-dimensional space.
///
/// All solutions are
/// `V̄' = (F̄(τ̄1)/(‖Û2 Û2' f‖² + 1)) · [Û2 Û2' f; 1] + [Û2 φ̄'₁.. ; φ̄'_last] + [τ̄1; 0]`
/// with `τ̄1 ∈ R(B R⁻¹ B')` free and `φ̄' ∈ N([f' Û2, 1])`, where
/// `F̄(w) = w' B R⁻¹ B' w / 2 - f' Û1 Û1' w - L/2`. The full-rank case is the
/// specialization with an empty `Û2` block.
#[derive(Debug, Clone)]
pub struct HjbeSolutionSet {
    case: HjbeCaseTag,
    /// Decomposition of `B R⁻¹ B' / 2`, the quadratic block of the lifted CQE.
    sd: SpectralData,
    f: Vector,
    l: f64,
    g_half: Matrix,
    membership_tol: f64,
    residual_tol: f64,
}

impl HjbeSolutionSet {
    pub fn case(&self) -> HjbeCaseTag {
        self.case
    }
    /// Spectral data (`Û1`, `Û2`, eigenvalues) of `B R⁻¹ B' / 2`.
    pub fn spectral(&self) -> &SpectralData {
        &self.sd
    }
    pub fn state_dim(&self) -> usize {
        self.f.len()
    }
    /// Dimension of the `φ̄'` parameter, `n - r̂ + 1`.
    pub fn phi_dim(&self) -> usize {
        self.f.len() - self.sd.rank + 1
    }

    /// The reduced convex quadratic `F̄(w) = w'(BR⁻¹B')w/2 - f'Û1Û1'w - L/2`.
    pub fn cqf_value(&self, w: &Vector) -> f64 {
        let f_m = self.sd.project_range(&self.f);
        w.dot(&(&self.g_half * w)) - f_m.dot(w) - self.l / 2.0
    }

    /// The constraint row `[f' Û2, 1]` that `φ̄'` must annihilate.
    pub fn phi_constraint(&self) -> Vector {
        let mut row = Vector::zeros(self.phi_dim());
        let f_coords = self.sd.u2.transpose() * &self.f;
        for i in 0..f_coords.len() {
            row[i] = f_coords[i];
        }
        row[self.phi_dim() - 1] = 1.0;
        row
    }

    /// Evaluate the solution set, returning `V̄' = [V̂_x', V̂_t]'`.
    ///
    /// `w1`, when given, must lie on the same level set of `F̄` as `tau1`
    /// (it names the coefficient through the level value; canonically
    /// `w1 = tau1`). `phi_prime` defaults to zero.
    pub fn evaluate(
        &self,
        w1: Option<&Vector>,
        tau1: &Vector,
        phi_prime: Option<&Vector>,
    ) -> Result<Vector, HjError> {
        let n = self.f.len();
        if tau1.len() != n {
            return Err(HjError::DimensionMismatch {
                expected: n,
                got: tau1.len(),
            });
        }
        let off_range = self.sd.project_null(tau1).norm();
        if off_range > self.membership_tol * tau1.norm().max(1.0) {
            return Err(CqeError::ParamOutsideSubspace {
                name: "tau1",
                deviation: off_range,
            }
            .into());
        }
        let tau_level = self.cqf_value(tau1);
        if let Some(w1) = w1 {
            let w_off = self.sd.project_null(w1).norm();
            if w_off > self.membership_tol * w1.norm().max(1.0) {
                return Err(CqeError::ParamOutsideSubspace {
                    name: "w1",
                    deviation: w_off,
                }
                .into());
            }
            let w_level = self.cqf_value(w1);
            let scale = w_level.abs().max(tau_level.abs()).max(1.0);
            if (w_level - tau_level).abs() > self.residual_tol * scale {
                return Err(CqeError::LevelMismatch { w_level, tau_level }.into());
            }
        }
        let zero_phi = Vector::zeros(self.phi_dim());
        let phi = phi_prime.unwrap_or(&zero_phi);
        if phi.len() != self.phi_dim() {
            return Err(HjError::DimensionMismatch {
                expected: self.phi_dim(),
                got: phi.len(),
            });
        }
        let violation = self.phi_constraint().dot(phi).abs();
        if violation > self.membership_tol * phi.norm().max(1.0) {
            return Err(CqeError::ParamOutsideSubspace {
                name: "phi_prime",
                deviation: violation,
            }
            .into());
        }

        let f_null = self.sd.project_null(&self.f);
        let kappa_sq = f_null.norm_squared() + 1.0;
        let coeff = tau_level / kappa_sq;

        let mut v_bar = Vector::zeros(n + 1);
        for i in 0..n {
            v_bar[i] = coeff * f_null[i] + tau1[i];
        }
        v_bar[n] = coeff;
        // φ̄ = [Û2 φ̄'₁..(n-r̂) ; φ̄'_last].
        let head = &self.sd.u2 * phi.rows(0, self.phi_dim() - 1);
        for i in 0..n {
            v_bar[i] += head[i];
        }
        v_bar[n] += phi[self.phi_dim() - 1];
        Ok(v_bar)
    }

    /// Map HJBE parameters to the parameters of the generic lifted CQE, for
    /// cross-checking against [`hjbe_cqe`] + [`crate::cqe::evaluate`].
    pub fn generic_params(&self, tau1: &Vector, phi_prime: Option<&Vector>) -> CqeParams {
        let n = self.f.len();
        let mut tau_bar = Vector::zeros(n + 1);
        for i in 0..n {
            tau_bar[i] = tau1[i];
        }
        let zero_phi = Vector::zeros(self.phi_dim());
        let phi = phi_prime.unwrap_or(&zero_phi);
        let head = &self.sd.u2 * phi.rows(0, self.phi_dim() - 1);
        let mut phi_bar = Vector::zeros(n + 1);
        for i in 0..n {
            phi_bar[i] = head[i];
        }
        phi_bar[n] = phi[self.phi_dim() - 1];
        CqeParams::RankDefOutOfRange {
            w: tau_bar.clone(),
            phi: phi_bar,
            tau: tau_bar,
        }
    }
}

/// Parameterize all solutions of the HJBE-CQE at state `x` (always solvable).
pub fn hjbe_parameterize(
    sys: &AffineSystem,
    cost: &CostWeights,
    x: &Vector,
    tols: &Tolerances,
) -> Result<HjbeSolutionSet, HjError> {
    if x.len() != sys.n {
        return Err(HjError::DimensionMismatch {
            expected: sys.n,
            got: x.len(),
        });
    }
    let g = control_gram(sys, cost, x)?;
    let g_half = &g * 0.5;
    let sd = spectral_decompose(&g_half, tols.rank)?;
    let case = if sd.is_full_rank() {
        HjbeCaseTag::FullRank
    } else {
        HjbeCaseTag::RankDeficient
    };
    Ok(HjbeSolutionSet {
        case,
        sd,
        f: sys.f(x),
        l: cost.l(x),
        g_half,
        membership_tol: tols.membership,
        residual_tol: tols.residual,
    })
}

/// The 2-D exponential regulator benchmark:
/// `f = [x2, -x1 e^{x1} + x2²/2]'`, `b = [0, e^{x1}]'`, `L = 2 x2²`, `R = 2`.
///
/// Its optimal feedback is `u = -x2` with value-function gradient
/// `V_x = [2 x1 - x2² e^{-x1}, 2 x2 e^{-x1}]`.
pub fn example_system() -> (AffineSystem, CostWeights) {
    let f: StateFn = Arc::new(|x: &Vector| {
        Vector::from_row_slice(&[x[1], -x[0] * x[0].exp() + x[1] * x[1] / 2.0])
    });
    let b: InputMapFn = Arc::new(|x: &Vector| Matrix::from_row_slice(2, 1, &[0.0, x[0].exp()]));
    let l: ScalarFn = Arc::new(|x: &Vector| 2.0 * x[1] * x[1]);
    let r: WeightFn = Arc::new(|_: &Vector| Matrix::from_element(1, 1, 2.0));
    (
        AffineSystem::new(2, 1, f, b).expect("example system is well formed"),
        CostWeights::new(l, r),
    )
}

/// Built-in systems resolvable by name from the CLI.
pub fn builtin_system(name: &str) -> Option<(AffineSystem, CostWeights)> {
    match name {
        "exp-regulator-2d" => Some(example_system()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cqe::{classify, residual, CqeCaseTag};
    use approx::assert_relative_eq;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn state(x1: f64, x2: f64) -> Vector {
        Vector::from_row_slice(&[x1, x2])
    }

    #[test]
    fn example_system_values() {
        let (sys, cost) = example_system();
        assert_relative_eq!(sys.f(&state(0.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let f11 = sys.f(&state(1.0, 1.0));
        assert_relative_eq!(f11[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(f11[1], -1.0_f64.exp() + 0.5, epsilon = 1e-15);
        let b0 = sys.b(&state(0.0, 0.0));
        assert_relative_eq!(b0[(0, 0)], 0.0, epsilon = 1e-15);
        assert_relative_eq!(b0[(1, 0)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(cost.l(&state(1.0, 2.0)), 8.0, epsilon = 1e-15);
    }

    #[test]
    fn registry_resolves() {
        assert!(builtin_system("exp-regulator-2d").is_some());
        assert!(builtin_system("nope").is_none());
    }

    #[test]
    fn hje_case_split_on_x2() {
        let (sys, cost) = example_system();
        let p0 = hje_to_cqe(&sys, &cost, &state(0.7, 0.0)).unwrap();
        let case0 = classify(&p0, &tols()).unwrap();
        assert_eq!(case0.tag, CqeCaseTag::RankDefInRange);
        // Discriminant is (f'(BR⁻¹B')†f + L)/2 = x1².
        assert_relative_eq!(case0.discriminant, 0.49, epsilon = 1e-12);

        let p1 = hje_to_cqe(&sys, &cost, &state(0.7, 0.3)).unwrap();
        assert_eq!(
            classify(&p1, &tols()).unwrap().tag,
            CqeCaseTag::RankDefOutOfRange
        );
    }

    #[test]
    fn hje_full_rank_trivial_system() {
        // B square invertible, R = I, f = 0, L = 0: unique gradient zero.
        let f: StateFn = Arc::new(|x: &Vector| Vector::zeros(x.len()));
        let b: InputMapFn = Arc::new(|_: &Vector| Matrix::identity(2, 2));
        let sys = AffineSystem::new(2, 2, f, b).unwrap();
        let cost = CostWeights::new(
            Arc::new(|_: &Vector| 0.0),
            Arc::new(|_: &Vector| Matrix::identity(2, 2)),
        );
        let p = hje_to_cqe(&sys, &cost, &state(1.0, -2.0)).unwrap();
        let case = classify(&p, &tols()).unwrap();
        assert_eq!(case.tag, CqeCaseTag::FullRank);
        assert!(case.boundary);
    }

    #[test]
    fn hji_slack_shifts_constant() {
        let (sys, cost) = example_system();
        let x = state(0.4, 0.0);
        let base = hje_to_cqe(&sys, &cost, &x).unwrap();
        let slacked = hji_to_cqe(&sys, &cost, &x, -0.5).unwrap();
        assert_relative_eq!(slacked.c() - base.c(), -0.5, epsilon = 1e-15);
        assert!(matches!(
            hji_to_cqe(&sys, &cost, &x, 0.1),
            Err(HjError::PositiveSlack { .. })
        ));
    }

    #[test]
    fn optimal_control_matches_feedback() {
        let (sys, cost) = example_system();
        let x = state(1.0, 2.0);
        let vx = Vector::from_row_slice(&[
            2.0 * 1.0 - 4.0 * (-1.0_f64).exp(),
            2.0 * 2.0 * (-1.0_f64).exp(),
        ]);
        let u = optimal_control(&vx, &sys, &cost, &x).unwrap();
        assert_relative_eq!(u[0], -2.0, epsilon = 1e-12);
        let zero = optimal_control(&Vector::zeros(2), &sys, &cost, &x).unwrap();
        assert_relative_eq!(zero[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hjbe_zero_state_zero_params_solves() {
        let (sys, cost) = example_system();
        let x = state(0.0, 1.0);
        let set = hjbe_parameterize(&sys, &cost, &x, &tols()).unwrap();
        assert_eq!(set.case(), HjbeCaseTag::RankDeficient);
        let v_bar = set.evaluate(None, &Vector::zeros(2), None).unwrap();
        let lifted = hjbe_cqe(&sys, &cost, &x).unwrap();
        let r = residual(&lifted, &v_bar).unwrap();
        assert!(r <= 1e-10, "residual {r}");
    }

    #[test]
    fn hjbe_full_rank_time_slot_takes_value() {
        // Square invertible input map makes the gram full rank.
        let f: StateFn =
            Arc::new(|x: &Vector| Vector::from_row_slice(&[x[1], -x[0]]));
        let b: InputMapFn = Arc::new(|_: &Vector| Matrix::identity(2, 2));
        let sys = AffineSystem::new(2, 2, f, b).unwrap();
        let cost = CostWeights::new(
            Arc::new(|x: &Vector| x.norm_squared()),
            Arc::new(|_: &Vector| Matrix::identity(2, 2)),
        );
        let x = state(0.3, -0.7);
        let set = hjbe_parameterize(&sys, &cost, &x, &tols()).unwrap();
        assert_eq!(set.case(), HjbeCaseTag::FullRank);
        let tau = Vector::from_row_slice(&[1.0, 2.0]);
        let v_bar = set.evaluate(None, &tau, None).unwrap();
        assert_relative_eq!(v_bar[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(v_bar[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(v_bar[2], set.cqf_value(&tau), epsilon = 1e-12);
        let lifted = hjbe_cqe(&sys, &cost, &x).unwrap();
        assert!(residual(&lifted, &v_bar).unwrap() <= 1e-10);
    }

    #[test]
    fn hjbe_rejects_off_subspace_tau() {
        let (sys, cost) = example_system();
        let set = hjbe_parameterize(&sys, &cost, &state(0.2, 0.5), &tols()).unwrap();
        // R(BR⁻¹B') = span{e2}; e1 is outside.
        let err = set.evaluate(None, &Vector::from_row_slice(&[1.0, 0.0]), None);
        assert!(matches!(err, Err(HjError::Cqe(_))));
    }
}
