//! Batch JSON front end for the quadform solvers.
//!
//! Reads a problem file (or stdin), dispatches to the requested solver, and
//! prints a result JSON on stdout. Exit codes: 0 success, 1 parse/validation
//! failure, 2 mathematical outcome (unsolvable/infeasible/unbounded/level
//! below minimum), 3 internal error.

use clap::{Parser, Subcommand};
use quadform_cli::{io, render};
use quadform::cqe::{self, CqeCaseTag, CqeError, CqeProblem};
use quadform::hj;
use quadform::oracle;
use quadform::qp::{self, EqQpDetail, QpError};
use quadform::qp_solver::{self, QpSolveError};
use quadform::scenarios;
use quadform::{CqfSpec, Tolerances};
use render::{rows_of, vec_of};
use serde_json::{json, Value};
use std::io::Read;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "quadform",
    version,
    about = "Closed-form CQE, Hamilton-Jacobi gradient-set, and QP solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pretty-print the output JSON.
    #[arg(long, global = true)]
    pretty: bool,
    /// Relative rank-truncation threshold (default n·ε·σ_max).
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Relative range-membership tolerance (default 1e-10).
    #[arg(long, global = true)]
    tol_membership: Option<f64>,
    /// Relative feasibility tolerance (default 1e-9).
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    /// Maximum number of inequality constraints for the 2^κ enumeration.
    #[arg(long, global = true)]
    subset_cap: Option<usize>,
    /// full | expedited.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Evaluate enumeration subsets in parallel.
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify and parameterize a convex quadratic equation.
    SolveCqe { file: Option<PathBuf> },
    /// Solve a general QP (equality + inequality constraints).
    SolveQp { file: Option<PathBuf> },
    /// Solve an equality-constrained QP with full categorization.
    SolveEqQp { file: Option<PathBuf> },
    /// Solve the extended QP restricted to the range of the Hessian.
    SolveExtQp { file: Option<PathBuf> },
    /// Reformulate the HJE (or HJI with slack) at a state as a CQE.
    Hje { file: Option<PathBuf> },
    /// Parameterize the HJBE solution set at a state.
    Hjbe { file: Option<PathBuf> },
    /// Null-space basis and pseudoinverse of a full-row-rank matrix.
    Nullspace { file: Option<PathBuf> },
    /// Least-norm solution of an underdetermined system.
    LeastNorm { file: Option<PathBuf> },
    /// Run a brute-force verification oracle.
    Verify { file: Option<PathBuf> },
    /// Run a named built-in scenario (table-1, table-2, hje-sweep).
    Scenario {
        name: String,
        /// Right-hand side of the equality constraint in table-2.
        #[arg(long, default_value_t = 1.0)]
        b: f64,
    },
}

enum Failure {
    Validation(String),
    Math {
        code: &'static str,
        message: String,
        details: Value,
    },
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Math { .. } => 2,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Failure::Validation(message) => json!({
                "code": "validation",
                "message": message,
            }),
            Failure::Math {
                code,
                message,
                details,
            } => json!({
                "code": code,
                "message": message,
                "details": details,
            }),
        }
    }
}

fn validation<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Validation(e.to_string())
}

fn math_failure(code: &'static str, message: String, details: Value) -> Failure {
    Failure::Math {
        code,
        message,
        details,
    }
}

fn read_problem_file(path: &Option<PathBuf>, expected_kind: &str) -> Result<io::ProblemFile, Failure> {
    let text = match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::read_to_string(p).map_err(|e| validation(format!("{}: {e}", p.display())))?
        }
        _ => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(validation)?;
            buf
        }
    };
    let file: io::ProblemFile = serde_json::from_str(&text).map_err(validation)?;
    if file.version != "1" {
        return Err(validation(format!(
            "unsupported problem file version '{}'",
            file.version
        )));
    }
    if file.kind != expected_kind {
        return Err(validation(format!(
            "problem file kind '{}' does not match subcommand '{expected_kind}'",
            file.kind
        )));
    }
    Ok(file)
}

fn payload<T: serde::de::DeserializeOwned>(file: &io::ProblemFile) -> Result<T, Failure> {
    serde_json::from_value(file.payload.clone()).map_err(validation)
}

fn cli_options(cli: &Cli) -> io::CliOptions {
    io::CliOptions {
        tol_rank: cli.tol_rank,
        tol_membership: cli.tol_membership,
        tol_feas: cli.tol_feas,
        subset_cap: cli.subset_cap,
        mode: cli.mode.clone(),
        parallel: cli.parallel,
    }
}

fn map_cqe_error(e: CqeError, problem: Option<(&CqeProblem, &Tolerances)>) -> Failure {
    match e {
        CqeError::UnsolvableCqe { discriminant } => {
            let condition = problem
                .and_then(|(p, tols)| cqe::classify(p, tols).ok())
                .map(|case| match case.tag {
                    CqeCaseTag::Unsolvable if discriminant < 0.0 => {
                        "discriminant k'M†k/4 - c is negative"
                    }
                    _ => "no unit direction available inside R(M)",
                })
                .unwrap_or("discriminant k'M†k/4 - c is negative");
            math_failure(
                "unsolvable",
                "the CQE has no real solution".into(),
                json!({ "discriminant": discriminant, "violated": condition }),
            )
        }
        CqeError::LevelBelowMinimum { level, minimum } => math_failure(
            "level-below-minimum",
            format!("level {level} is below the minimum {minimum}"),
            json!({ "level": level, "minimum": minimum }),
        ),
        CqeError::EmptyPreimage { level, constant } => math_failure(
            "empty-preimage",
            format!("no preimage at level {level}; the quadratic is constant {constant}"),
            json!({ "level": level, "constant": constant }),
        ),
        other => validation(other),
    }
}

fn map_qp_error(e: QpError) -> Failure {
    match e {
        QpError::LevelBelowMinimum { level, minimum } => math_failure(
            "level-below-minimum",
            format!("level {level} is below the finite optimum {minimum}"),
            json!({ "level": level, "minimum": minimum }),
        ),
        QpError::InconsistentConstraint { residual } => math_failure(
            "infeasible",
            "equality constraints are inconsistent".into(),
            json!({ "least_squares_residual": residual }),
        ),
        QpError::QNotInRange { deviation } => math_failure(
            "q-not-in-range",
            "q lies outside R(P); the extended problem is ill posed".into(),
            json!({ "deviation": deviation }),
        ),
        other => validation(other),
    }
}

fn map_qp_solve_error(e: QpSolveError) -> Failure {
    match e {
        QpSolveError::InfeasibleProblem => math_failure(
            "infeasible",
            "no feasible candidate found".into(),
            json!({}),
        ),
        QpSolveError::UnboundedProblem => math_failure(
            "unbounded",
            "the problem is unbounded below".into(),
            json!({}),
        ),
        QpSolveError::Qp(e) => map_qp_error(e),
        other => validation(other),
    }
}

fn run(cli: &Cli) -> Result<(String, Value), Failure> {
    let opts = cli_options(cli);
    match &cli.command {
        Command::SolveCqe { file } => {
            let file = read_problem_file(file, "cqe")?;
            let solve_opts = io::resolve_options(&file.options, &opts).map_err(validation)?;
            let tols = solve_opts.tols;
            let data: io::CqePayload = payload(&file)?;
            let m = io::matrix(&data.m, "m").map_err(validation)?;
            let problem =
                CqeProblem::new(m, io::vector(&data.k), data.c).map_err(validation)?;
            let set = cqe::parameterize(&problem, &tols)
                .map_err(|e| map_cqe_error(e, Some((&problem, &tols))))?;
            let mut out = render::cqe_solution_out(&set);
            if let Some(params) = data.params {
                let params = params.into_params().map_err(validation)?;
                let z = cqe::evaluate(&set, &params).map_err(|e| map_cqe_error(e, None))?;
                let residual = cqe::residual(&problem, &z).map_err(validation)?;
                out.evaluated = Some(render::EvaluatedOut {
                    z: vec_of(&z),
                    residual,
                });
            }
            if let Some(z) = data.invert {
                let params =
                    cqe::invert(&set, &io::vector(&z)).map_err(|e| map_cqe_error(e, None))?;
                out.inverted = Some(render::CqeParamsOut::from(&params));
            }
            Ok(("cqe".into(), serde_json::to_value(out).map_err(validation)?))
        }
        Command::SolveQp { file } => {
            let file = read_problem_file(file, "qp")?;
            let mut solve_opts = io::resolve_options(&file.options, &opts).map_err(validation)?;
            solve_opts.trace = true;
            let data: io::QpPayload = payload(&file)?;
            let problem = data.into_problem().map_err(validation)?;
            let result = qp_solver::qp_solve(&problem, &solve_opts).map_err(map_qp_solve_error)?;
            let out = render::qp_solve_out(&result);
            Ok(("qp".into(), serde_json::to_value(out).map_err(validation)?))
        }
        Command::SolveEqQp { file } => {
            let file = read_problem_file(file, "eq-qp")?;
            let solve_opts = io::resolve_options(&file.options, &opts).map_err(validation)?;
            let data: io::EqQpPayload = payload(&file)?;
            let f = CqfSpec::new(
                io::matrix(&data.p, "p").map_err(validation)?,
                io::vector(&data.q),
                data.s,
            )
            .map_err(map_qp_error)?;
            let a = io::matrix(&data.a, "a").map_err(validation)?;
            let b = io::vector(&data.b);
            let outcome =
                qp::equality_solve(&f, &a, &b, &solve_opts.tols).map_err(map_qp_error)?;
            match &outcome.detail {
                EqQpDetail::FiniteQp {
                    l_star,
                    x_particular,
                    freedom_basis,
                    unique,
                } => {
                    let (kkt, _) =
                        qp::kkt_residual(&f, &a, &b, x_particular).map_err(map_qp_error)?;
                    Ok((
                        "eq-qp".into(),
                        json!({
                            "category": "finite-qp",
                            "optimal_value": l_star,
                            "optimum": vec_of(x_particular),
                            "unique": unique,
                            "freedom_basis": rows_of(freedom_basis),
                            "feasible_point": vec_of(&outcome.feasible_point),
                            "kkt_residual": kkt,
                        }),
                    ))
                }
                EqQpDetail::Constant { value } => Ok((
                    "eq-qp".into(),
                    json!({
                        "category": "constant",
                        "constant_value": value,
                        "feasible_point": vec_of(&outcome.feasible_point),
                    }),
                )),
                EqQpDetail::UnboundedQp { direction } => Err(math_failure(
                    "unbounded",
                    "the equality-constrained QP is unbounded below".into(),
                    json!({
                        "category": "unbounded-qp",
                        "direction": vec_of(direction),
                        "feasible_point": vec_of(&outcome.feasible_point),
                    }),
                )),
                EqQpDetail::UnboundedLp { direction } => Err(math_failure(
                    "unbounded",
                    "the problem reduces to an unbounded LP".into(),
                    json!({
                        "category": "unbounded-lp",
                        "direction": vec_of(direction),
                        "feasible_point": vec_of(&outcome.feasible_point),
                    }),
                )),
            }
        }
        Command::SolveExtQp { file } => {
            let file = read_problem_file(file, "ext-qp")?;
            let solve_opts = io::resolve_options(&file.options, &opts).map_err(validation)?;
            let data: io::ExtQpPayload = payload(&file)?;
            let f = CqfSpec::new(
                io::matrix(&data.p, "p").map_err(validation)?,
                io::vector(&data.q),
                data.s,
            )
            .map_err(map_qp_error)?;
            let outcome = qp::extended_solve(&f, &solve_opts.tols).map_err(map_qp_error)?;
            let mut result = json!({
                "optimal_value": outcome.l_star,
                "optimum": vec_of(&outcome.x_star),
            });
            if let Some(level) = data.level {
                let pre = outcome.preimage(level).map_err(map_qp_error)?;
                result["preimage"] =
                    serde_json::to_value(render::preimage_out(level, &pre)).map_err(validation)?;
            }
            Ok(("ext-qp".into(), result))
        }
        Command::Hje { file } => {
            let file = read_problem_file(file, "hje")?;
            let solve_opts = io::resolve_options(&file.options, &opts).map_err(validation)?;
            let data: io::HjePayload = payload(&file)?;
            let (sys, cost) = hj::builtin_system(&data.system)
                .ok_or_else(|| validation(format!("unknown system '{}'", data.system)))?;
            let x = io::vector(&data.x);
            let y = data.y.unwrap_or(0.0);
            let problem = hj::hji_to_cqe(&sys, &cost, &x, y).map_err(validation)?;
            let case = cqe::classify(&problem, &solve_opts.tols)
                .map_err(|e| map_cqe_error(e, None))?;
            Ok((
                "hje".into(),
                json!({
                    "system": data.system,
                    "x": data.x,
                    "slack": y,
                    "cqe": {
                        "m": rows_of(problem.m()),
                        "k": vec_of(problem.k()),
                        "c": problem.c(),
                    },
                    "case": render::case_name(case.tag),
                    "discriminant": case.discriminant,
                    "boundary": case.boundary,
                    "solvable": case.tag != CqeCaseTag::Unsolvable,
                }),
            ))
        }
        Command::Hjbe { file } => {
            let file = read_problem_file(file, "hjbe")?;
            let solve_opts = io::resolve_options(&file.options, &opts).map_err(validation)?;
            let data: io::HjbePayload = payload(&file)?;
            let (sys, cost) = hj::builtin_system(&data.system)
                .ok_or_else(|| validation(format!("unknown system '{}'", data.system)))?;
            let x = io::vector(&data.x);
            let set =
                hj::hjbe_parameterize(&sys, &cost, &x, &solve_opts.tols).map_err(validation)?;
            let tau1 = data
                .tau1
                .map(|t| io::vector(&t))
                .unwrap_or_else(|| quadform::Vector::zeros(sys.state_dim()));
            let phi = data.phi_prime.map(|p| io::vector(&p));
            let v_bar = set
                .evaluate(None, &tau1, phi.as_ref())
                .map_err(validation)?;
            let lifted = hj::hjbe_cqe(&sys, &cost, &x).map_err(validation)?;
            let residual = cqe::residual(&lifted, &v_bar).map_err(validation)?;
            Ok((
                "hjbe".into(),
                json!({
                    "system": data.system,
                    "x": data.x,
                    "case": match set.case() {
                        hj::HjbeCaseTag::FullRank => "full-rank",
                        hj::HjbeCaseTag::RankDeficient => "rank-deficient",
                    },
                    "rank": set.spectral().rank,
                    "phi_dim": set.phi_dim(),
                    "v_bar": vec_of(&v_bar),
                    "residual": residual,
                }),
            ))
        }
        Command::Nullspace { file } => {
            let file = read_problem_file(file, "nullspace")?;
            let solve_opts = io::resolve_options(&file.options, &opts).map_err(validation)?;
            let data: io::NullspacePayload = payload(&file)?;
            let a = io::matrix(&data.a, "a").map_err(validation)?;
            let basis =
                quadform::nullspace_basis(&a, solve_opts.tols.rank).map_err(validation)?;
            Ok((
                "nullspace".into(),
                json!({
                    "v2": rows_of(&basis.v2),
                    "pinv": rows_of(&basis.pinv),
                    "rank": basis.rank,
                }),
            ))
        }
        Command::LeastNorm { file } => {
            let file = read_problem_file(file, "least-norm")?;
            let solve_opts = io::resolve_options(&file.options, &opts).map_err(validation)?;
            let data: io::LeastNormPayload = payload(&file)?;
            let a = io::matrix(&data.a, "a").map_err(validation)?;
            let b = io::vector(&data.b);
            let n = a.ncols();
            let f = CqfSpec::new(
                quadform::Matrix::identity(n, n) * 2.0,
                quadform::Vector::zeros(n),
                0.0,
            )
            .map_err(map_qp_error)?;
            let outcome = qp::equality_solve(&f, &a, &b, &solve_opts.tols).map_err(map_qp_error)?;
            let x = outcome
                .x_particular()
                .expect("least-norm problems always have a finite unique optimum")
                .clone();
            let (kkt, _) = qp::kkt_residual(&f, &a, &b, &x).map_err(map_qp_error)?;
            Ok((
                "least-norm".into(),
                json!({
                    "optimum": vec_of(&x),
                    "optimal_value": outcome.l_star(),
                    "kkt_residual": kkt,
                }),
            ))
        }
        Command::Verify { file } => {
            let file = read_problem_file(file, "verify")?;
            let data: io::VerifyPayload = payload(&file)?;
            match data {
                io::VerifyPayload::GridMinimize {
                    p,
                    q,
                    s,
                    a,
                    b,
                    ineq,
                    lower,
                    upper,
                    step,
                } => {
                    let f = CqfSpec::new(
                        io::matrix(&p, "p").map_err(validation)?,
                        io::vector(&q),
                        s,
                    )
                    .map_err(map_qp_error)?;
                    let eq = match (&a, &b) {
                        (Some(a), Some(b)) => {
                            Some((io::matrix(a, "a").map_err(validation)?, io::vector(b)))
                        }
                        (None, None) => None,
                        _ => return Err(validation("a and b must be given together")),
                    };
                    let ineq: Vec<_> = ineq.iter().map(|r| (io::vector(&r.c), r.d)).collect();
                    let grid = oracle::GridSpec::new(io::vector(&lower), io::vector(&upper), step)
                        .map_err(validation)?;
                    let (minimum, argmins) = oracle::grid_minimize(
                        &f,
                        eq.as_ref().map(|(a, b)| (a, b)),
                        &ineq,
                        &grid,
                    )
                    .map_err(|e| match e {
                        oracle::OracleError::NoFeasibleGridPoint => math_failure(
                            "infeasible",
                            "no grid point satisfies the constraints".into(),
                            json!({}),
                        ),
                        other => validation(other),
                    })?;
                    let shown: Vec<Vec<f64>> = argmins.iter().take(100).map(vec_of).collect();
                    Ok((
                        "verify".into(),
                        json!({
                            "op": "grid-minimize",
                            "minimum": minimum,
                            "argmin_count": argmins.len(),
                            "argmins": shown,
                        }),
                    ))
                }
                io::VerifyPayload::ScalarRoots { m, k, c } => {
                    if m <= 0.0 {
                        return Err(validation("scalar-roots requires m > 0"));
                    }
                    Ok((
                        "verify".into(),
                        json!({ "op": "scalar-roots", "roots": oracle::scalar_roots(m, k, c) }),
                    ))
                }
                io::VerifyPayload::NullspaceIntersection { a, p } => {
                    let a = io::matrix(&a, "a").map_err(validation)?;
                    let p = io::matrix(&p, "p").map_err(validation)?;
                    let dim =
                        oracle::nullspace_intersection_dim(&a, &p).map_err(validation)?;
                    Ok((
                        "verify".into(),
                        json!({ "op": "nullspace-intersection", "dimension": dim }),
                    ))
                }
            }
        }
        Command::Scenario { name, b } => match name.as_str() {
            "table-1" => {
                let (_, result) =
                    scenarios::run_table_1(cli.parallel).map_err(map_qp_solve_error)?;
                let out = render::qp_solve_out(&result);
                Ok((
                    "scenario".into(),
                    json!({
                        "name": "table-1",
                        "result": serde_json::to_value(out).map_err(validation)?,
                    }),
                ))
            }
            "table-2" => {
                let (_, result) =
                    scenarios::run_table_2(*b, cli.parallel).map_err(map_qp_solve_error)?;
                let out = render::qp_solve_out(&result);
                Ok((
                    "scenario".into(),
                    json!({
                        "name": "table-2",
                        "b": b,
                        "result": serde_json::to_value(out).map_err(validation)?,
                    }),
                ))
            }
            "hje-sweep" => {
                let rows = scenarios::gradient_sweep(&scenarios::default_sweep_states())
                    .map_err(validation)?;
                let rows: Vec<_> = rows.iter().map(render::SweepRowOut::from).collect();
                Ok((
                    "scenario".into(),
                    json!({
                        "name": "hje-sweep",
                        "rows": serde_json::to_value(rows).map_err(validation)?,
                    }),
                ))
            }
            other => Err(validation(format!(
                "unknown scenario '{other}' (expected table-1, table-2, hje-sweep)"
            ))),
        },
    }
}

fn emit(pretty: bool, value: &Value) {
    let text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .expect("output serialization cannot fail");
    println!("{text}");
}

fn main() {
    let cli = Cli::parse();
    let pretty = cli.pretty;
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(&cli)));
    let code = match outcome {
        Ok(Ok((kind, result))) => {
            emit(pretty, &json!({ "version": "1", "kind": kind, "result": result }));
            0
        }
        Ok(Err(failure)) => {
            emit(
                pretty,
                &json!({ "version": "1", "error": failure.to_json() }),
            );
            failure.exit_code()
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            emit(
                pretty,
                &json!({
                    "version": "1",
                    "error": { "code": "internal", "message": message }
                }),
            );
            3
        }
    };
    std::process::exit(code);
}
