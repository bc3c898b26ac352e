//! Input schema: a versioned JSON problem file with a `kind` tag, a
//! kind-specific numeric payload (matrices as nested row arrays), and
//! optional solver options. Dimensions are cross-checked while converting to
//! the library types.

use nalgebra::{DMatrix, DVector};
use quadform::qp_solver::{Mode, SolveOptions};
use quadform::{CqeParams, CqfSpec, QpProblem, RankPolicy, Tolerances};
use serde::Deserialize;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: String,
    pub kind: String,
    pub payload: serde_json::Value,
    #[serde(default)]
    pub options: FileOptions,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileOptions {
    pub tol_rank: Option<f64>,
    pub tol_membership: Option<f64>,
    pub tol_feas: Option<f64>,
    pub subset_cap: Option<usize>,
    pub mode: Option<String>,
    pub parallel: Option<bool>,
}

/// Flags given on the command line; they take precedence over file options.
#[derive(Debug, Default, Clone)]
pub struct CliOptions {
    pub tol_rank: Option<f64>,
    pub tol_membership: Option<f64>,
    pub tol_feas: Option<f64>,
    pub subset_cap: Option<usize>,
    pub mode: Option<String>,
    pub parallel: bool,
}

pub fn resolve_options(file: &FileOptions, cli: &CliOptions) -> Result<SolveOptions, String> {
    let mut tols = Tolerances::default();
    if let Some(r) = cli.tol_rank.or(file.tol_rank) {
        if !(r > 0.0) {
            return Err("tol-rank must be positive".into());
        }
        tols.rank = RankPolicy::Relative(r);
    }
    if let Some(m) = cli.tol_membership.or(file.tol_membership) {
        if !(m > 0.0) {
            return Err("tol-membership must be positive".into());
        }
        tols.membership = m;
    }
    if let Some(f) = cli.tol_feas.or(file.tol_feas) {
        if !(f > 0.0) {
            return Err("tol-feas must be positive".into());
        }
        tols.feasibility = f;
    }
    let mode = match cli.mode.as_deref().or(file.mode.as_deref()) {
        None | Some("full") => Mode::Full,
        Some("expedited") => Mode::Expedited,
        Some(other) => return Err(format!("unknown mode '{other}' (expected full|expedited)")),
    };
    Ok(SolveOptions {
        mode,
        subset_cap: cli.subset_cap.or(file.subset_cap).unwrap_or(20),
        parallel: cli.parallel || file.parallel.unwrap_or(false),
        trace: false,
        tols,
    })
}

pub fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix, String> {
    if rows.is_empty() {
        return Err(format!("{what}: matrix must have at least one row"));
    }
    let cols = rows[0].len();
    if cols == 0 {
        return Err(format!("{what}: matrix must have at least one column"));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(format!("{what}: ragged rows"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_row_slice(rows.len(), cols, &flat))
}

pub fn vector(entries: &[f64]) -> Vector {
    Vector::from_row_slice(entries)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CqePayload {
    pub m: Vec<Vec<f64>>,
    pub k: Vec<f64>,
    pub c: f64,
    /// Optional parameters at which to evaluate the solution set.
    pub params: Option<CqeParamsPayload>,
    /// Optional solution vector to invert back to parameters.
    pub invert: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CqeParamsPayload {
    pub v: Option<Vec<f64>>,
    pub rho: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
}

impl CqeParamsPayload {
    pub fn into_params(self) -> Result<CqeParams, String> {
        match (self.v, self.rho, self.eps, self.w, self.phi, self.tau) {
            (Some(v), None, None, None, None, None) => {
                Ok(CqeParams::FullRank { v: vector(&v) })
            }
            (None, Some(rho), Some(eps), None, None, None) => Ok(CqeParams::RankDefInRange {
                rho: vector(&rho),
                eps: vector(&eps),
            }),
            (None, None, None, Some(w), phi, Some(tau)) => {
                let phi = phi.map(|p| vector(&p)).unwrap_or_else(|| {
                    Vector::zeros(tau.len())
                });
                Ok(CqeParams::RankDefOutOfRange {
                    w: vector(&w),
                    phi,
                    tau: vector(&tau),
                })
            }
            _ => Err(
                "params must be one of {v}, {rho, eps}, {w, [phi,] tau}".into(),
            ),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IneqPayload {
    pub c: Vec<f64>,
    pub d: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpPayload {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    #[serde(default)]
    pub s: f64,
    pub a: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub ineq: Vec<IneqPayload>,
}

impl QpPayload {
    pub fn cqf(&self) -> Result<CqfSpec, String> {
        let p = matrix(&self.p, "p")?;
        CqfSpec::new(p, vector(&self.q), self.s).map_err(|e| e.to_string())
    }

    pub fn into_problem(self) -> Result<QpProblem, String> {
        let f = self.cqf()?;
        let equality = match (&self.a, &self.b) {
            (Some(a), Some(b)) => Some((matrix(a, "a")?, vector(b))),
            (None, None) => None,
            _ => return Err("a and b must be given together".into()),
        };
        let ineq = self
            .ineq
            .iter()
            .map(|row| (vector(&row.c), row.d))
            .collect();
        QpProblem::new(f, equality, ineq).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqQpPayload {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    #[serde(default)]
    pub s: f64,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtQpPayload {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    #[serde(default)]
    pub s: f64,
    /// Level at which to parameterize the preimage, in addition to the
    /// optimum itself.
    pub level: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjePayload {
    pub system: String,
    pub x: Vec<f64>,
    /// HJI slack `y ≤ 0`; omitted or zero means the HJE.
    pub y: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjbePayload {
    pub system: String,
    pub x: Vec<f64>,
    pub tau1: Option<Vec<f64>>,
    pub phi_prime: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullspacePayload {
    pub a: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeastNormPayload {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VerifyPayload {
    GridMinimize {
        p: Vec<Vec<f64>>,
        q: Vec<f64>,
        #[serde(default)]
        s: f64,
        a: Option<Vec<Vec<f64>>>,
        b: Option<Vec<f64>>,
        #[serde(default)]
        ineq: Vec<IneqPayload>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        step: f64,
    },
    ScalarRoots {
        m: f64,
        k: f64,
        c: f64,
    },
    NullspaceIntersection {
        a: Vec<Vec<f64>>,
        p: Vec<Vec<f64>>,
    },
}
