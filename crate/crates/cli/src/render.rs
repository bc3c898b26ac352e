//! Output schema: serializable mirrors of the solver results. Every matrix is
//! emitted as nested row arrays and every numeric as a 64-bit float (shortest
//! round-trip decimal). Structures also derive `Deserialize` so emitted JSON
//! can be re-validated against the schema.

use nalgebra::{DMatrix, DVector};
use quadform::cqe::{CqeCase, CqeCaseTag, CqeParams, CqeSolutionSet, LevelPreimage};
use quadform::qp_solver::{
    CandidateKind, EdgeCategory, LedgerEntry, QpSolveResult, SubsetOutcome, SubsetReport,
};
use quadform::scenarios::{SweepParams, SweepRow};
use serde::{Deserialize, Serialize};

pub fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub fn case_name(tag: CqeCaseTag) -> &'static str {
    match tag {
        CqeCaseTag::FullRank => "full-rank",
        CqeCaseTag::RankDefInRange => "rank-def-in-range",
        CqeCaseTag::RankDefOutOfRange => "rank-def-out-of-range",
        CqeCaseTag::Unsolvable => "unsolvable",
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CqeCaseOut {
    pub case: String,
    pub discriminant: f64,
    pub boundary: bool,
}

impl CqeCaseOut {
    pub fn from(case: &CqeCase) -> Self {
        Self {
            case: case_name(case.tag).to_string(),
            discriminant: case.discriminant,
            boundary: case.boundary,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CqeParamsOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
}

impl CqeParamsOut {
    pub fn from(params: &CqeParams) -> Self {
        let mut out = Self {
            v: None,
            rho: None,
            eps: None,
            w: None,
            phi: None,
            tau: None,
        };
        match params {
            CqeParams::FullRank { v } => out.v = Some(vec_of(v)),
            CqeParams::RankDefInRange { rho, eps } => {
                out.rho = Some(vec_of(rho));
                out.eps = Some(vec_of(eps));
            }
            CqeParams::RankDefOutOfRange { w, phi, tau } => {
                out.w = Some(vec_of(w));
                out.phi = Some(vec_of(phi));
                out.tau = Some(vec_of(tau));
            }
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RangeSplitOut {
    pub k_in_range: Vec<f64>,
    pub k_out_of_range: Vec<f64>,
    pub out_norm: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CqeSolveOut {
    #[serde(flatten)]
    pub case: CqeCaseOut,
    pub dim: usize,
    pub rank: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Dimension of the free null-space motion (`ε` or `φ` directions).
    pub null_freedom: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<RangeSplitOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluated: Option<EvaluatedOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inverted: Option<CqeParamsOut>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluatedOut {
    pub z: Vec<f64>,
    pub residual: f64,
}

pub fn cqe_solution_out(set: &CqeSolutionSet) -> CqeSolveOut {
    let case = set.case();
    let null_freedom = match case.tag {
        CqeCaseTag::FullRank => 0,
        CqeCaseTag::RankDefInRange => set.spectral().dim - set.spectral().rank,
        CqeCaseTag::RankDefOutOfRange => {
            // φ lives in N(M) ∩ N(k'): one direction of N(M) is pinned to
            // k_{M⊥}.
            set.spectral().dim - set.spectral().rank - 1
        }
        CqeCaseTag::Unsolvable => 0,
    };
    CqeSolveOut {
        case: CqeCaseOut::from(case),
        dim: set.spectral().dim,
        rank: set.spectral().rank,
        center: vec_of(set.center()),
        radius: set.radius(),
        null_freedom,
        split: set.split().map(|s| RangeSplitOut {
            k_in_range: vec_of(&s.in_range),
            k_out_of_range: vec_of(&s.out_of_range),
            out_norm: s.out_norm,
        }),
        evaluated: None,
        inverted: None,
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LedgerEntryOut {
    pub value: f64,
    pub point: Vec<f64>,
    pub subset: Vec<usize>,
    pub kind: String,
}

impl LedgerEntryOut {
    pub fn from(e: &LedgerEntry) -> Self {
        Self {
            value: e.value,
            point: vec_of(&e.point),
            subset: e.subset.clone(),
            kind: match e.kind {
                CandidateKind::EqualityBase => "equality-base",
                CandidateKind::Edge => "edge",
                CandidateKind::Vertex => "vertex",
            }
            .to_string(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QpSolveOut {
    pub optimal_value: f64,
    pub terminal_optima: Vec<Vec<f64>>,
    pub optimality_subsets: Vec<Vec<usize>>,
    pub expedited: bool,
    pub ledger: Vec<LedgerEntryOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsets: Option<Vec<SubsetReportOut>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubsetReportOut {
    pub subset: Vec<usize>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant_value: Option<f64>,
}

impl SubsetReportOut {
    pub fn from(r: &SubsetReport) -> Self {
        let mut out = Self {
            subset: r.subset.clone(),
            status: String::new(),
            category: None,
            point: None,
            value: None,
            candidate: None,
            constant_value: None,
        };
        match &r.outcome {
            SubsetOutcome::Inconsistent => out.status = "inconsistent".into(),
            SubsetOutcome::RankDeficientSkipped { .. } => out.status = "rank-deficient".into(),
            SubsetOutcome::Edge {
                category,
                point,
                value,
                candidate,
            } => {
                out.status = "edge".into();
                out.category = Some(
                    match category {
                        EdgeCategory::Qp => "qp",
                        EdgeCategory::QpUnbounded => "qp-unbounded",
                        EdgeCategory::Lp => "lp",
                        EdgeCategory::Constant { .. } => "constant",
                    }
                    .to_string(),
                );
                if let EdgeCategory::Constant { value } = category {
                    out.constant_value = Some(*value);
                }
                out.point = point.as_ref().map(vec_of);
                out.value = *value;
                out.candidate = Some(*candidate);
            }
            SubsetOutcome::Vertex {
                point,
                value,
                candidate,
            } => {
                out.status = "vertex".into();
                out.point = Some(vec_of(point));
                out.value = *value;
                out.candidate = Some(*candidate);
            }
        }
        out
    }
}

pub fn qp_solve_out(result: &QpSolveResult) -> QpSolveOut {
    QpSolveOut {
        optimal_value: result.l_star,
        terminal_optima: result.terminal_optima.iter().map(vec_of).collect(),
        optimality_subsets: result.optimality_subsets.clone(),
        expedited: result.expedited,
        ledger: result.ledger.entries.iter().map(LedgerEntryOut::from).collect(),
        subsets: result
            .trace
            .as_ref()
            .map(|t| t.iter().map(SubsetReportOut::from).collect()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PreimageOut {
    pub level: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub range_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<Vec<f64>>>,
}

pub fn preimage_out(level: f64, pre: &LevelPreimage) -> PreimageOut {
    PreimageOut {
        level,
        center: vec_of(pre.center()),
        radius: pre.radius(),
        range_dim: pre.spectral().rank,
        roots: pre
            .roots_1d()
            .map(|(a, b)| vec![vec_of(&a), vec_of(&b)]),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepRowOut {
    pub x: Vec<f64>,
    pub case: String,
    pub residual: f64,
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
}

impl SweepRowOut {
    pub fn from(row: &SweepRow) -> Self {
        let mut out = Self {
            x: vec![row.x1, row.x2],
            case: case_name(row.case).to_string(),
            residual: row.residual,
            scale: row.residual_scale,
            eps1: None,
            rho2: None,
            level: None,
            tau2: None,
        };
        match row.params {
            SweepParams::InRange { eps1, rho2 } => {
                out.eps1 = Some(eps1);
                out.rho2 = Some(rho2);
            }
            SweepParams::OutOfRange { level, tau2 } => {
                out.level = Some(level);
                out.tau2 = Some(tau2);
            }
        }
        out
    }
}
