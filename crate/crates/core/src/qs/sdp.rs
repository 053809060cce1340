//! Solver-agnostic semidefinite feasibility problems and the bundled
//! conic backend.
//!
//! A problem is a list of affine constraints on a real decision vector x:
//! equality rows a.x = b, nonnegativity rows a.x >= b, and semidefinite
//! blocks F(x) = F0 + sum x_i Fi >= 0. Backends translate this into their
//! native form and report one of three outcomes. A `Feasible` outcome
//! always carries a witness that has been re-checked against the original
//! constraints by `verify_solution`, independently of whatever the solver
//! claimed; a witness that fails the check degrades to `Unknown`, never to
//! a false certificate.

use crate::error::{Error, Result};
use crate::qs::assembly::symmetric_min_eigenvalue;
use nalgebra::DMatrix;

/// One scalar affine row over the decision vector.
#[derive(Debug, Clone)]
pub struct LinearRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// One matrix constraint F0 + sum x_i Fi >= 0 (symmetric blocks).
#[derive(Debug, Clone)]
pub struct AffineMatrixConstraint {
    pub constant: DMatrix<f64>,
    pub coefficients: Vec<DMatrix<f64>>,
}

impl AffineMatrixConstraint {
    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (xi, fi) in x.iter().zip(&self.coefficients) {
            m += fi * *xi;
        }
        m
    }
}

/// A semidefinite feasibility problem.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub nvars: usize,
    /// Rows with coeffs . x = rhs.
    pub equalities: Vec<LinearRow>,
    /// Rows with coeffs . x >= rhs.
    pub nonneg: Vec<LinearRow>,
    pub psd: Vec<AffineMatrixConstraint>,
}

/// Backend-reported outcome.
#[derive(Debug, Clone)]
pub enum SdpOutcome {
    /// A witness satisfying every constraint within the verification
    /// tolerance.
    Feasible(Vec<f64>),
    /// The solver produced an infeasibility certificate.
    Infeasible(String),
    /// No decision: solver failure, iteration cap, or a witness that did
    /// not survive verification.
    Unknown(String),
}

/// Narrow interface every conic solver plugs into. Backends are stateless
/// between calls, so one instance may serve parallel sweeps.
pub trait SdpBackend: Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, problem: &SdpProblem) -> Result<SdpOutcome>;
}

/// Checks a candidate witness against all constraints. Violations are
/// measured absolutely: the feasibility problems built here are trace
/// normalized, so their data is of unit scale.
pub fn verify_solution(
    problem: &SdpProblem,
    x: &[f64],
    tol: f64,
) -> std::result::Result<(), String> {
    if x.len() != problem.nvars {
        return Err(format!("witness length {} != {}", x.len(), problem.nvars));
    }
    let dot = |row: &LinearRow| -> f64 {
        row.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    };
    for (i, row) in problem.equalities.iter().enumerate() {
        let residual = (dot(row) - row.rhs).abs();
        if residual > tol * row.rhs.abs().max(1.0) {
            return Err(format!("equality {i} violated by {residual:.3e}"));
        }
    }
    for (i, row) in problem.nonneg.iter().enumerate() {
        let slack = dot(row) - row.rhs;
        if slack < -tol {
            return Err(format!("nonnegativity {i} violated by {:.3e}", -slack));
        }
    }
    for (i, block) in problem.psd.iter().enumerate() {
        let eig = symmetric_min_eigenvalue(&block.evaluate(x));
        if eig < -tol {
            return Err(format!("semidefinite block {i} has eigenvalue {eig:.3e}"));
        }
    }
    Ok(())
}

/// The bundled interior-point backend.
#[derive(Debug, Default, Clone, Copy)]
pub struct ClarabelBackend;

/// Scaled upper-triangle vectorization matching the solver's semidefinite
/// cone: column-major, off-diagonal entries multiplied by sqrt(2).
fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for col in 0..d {
        for row in 0..=col {
            if row == col {
                out.push(m[(row, col)]);
            } else {
                out.push((m[(row, col)] + m[(col, row)]) * std::f64::consts::FRAC_1_SQRT_2);
            }
        }
    }
    out
}

impl SdpBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, problem: &SdpProblem) -> Result<SdpOutcome> {
        use clarabel::algebra::CscMatrix;
        use clarabel::solver::{
            DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
        };

        let n = problem.nvars;
        let mut rows: Vec<usize> = Vec::new();
        let mut cols: Vec<usize> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let mut row = 0usize;

        // The conic form is A x + s = b with s in a cone, so each of our
        // rows enters negated: s = b - A x.
        let push_row = |rows: &mut Vec<usize>,
                            cols: &mut Vec<usize>,
                            vals: &mut Vec<f64>,
                            b: &mut Vec<f64>,
                            row: &mut usize,
                            coeffs: &[f64],
                            rhs: f64| {
            for (j, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    rows.push(*row);
                    cols.push(j);
                    vals.push(-c);
                }
            }
            b.push(-rhs);
            *row += 1;
        };

        if !problem.equalities.is_empty() {
            for eq in &problem.equalities {
                push_row(&mut rows, &mut cols, &mut vals, &mut b, &mut row, &eq.coeffs, eq.rhs);
            }
            cones.push(SupportedConeT::ZeroConeT(problem.equalities.len()));
        }
        if !problem.nonneg.is_empty() {
            for ineq in &problem.nonneg {
                push_row(
                    &mut rows, &mut cols, &mut vals, &mut b, &mut row, &ineq.coeffs, ineq.rhs,
                );
            }
            cones.push(SupportedConeT::NonnegativeConeT(problem.nonneg.len()));
        }
        for block in &problem.psd {
            let d = block.constant.nrows();
            let f0 = svec(&block.constant);
            let fis: Vec<Vec<f64>> = block.coefficients.iter().map(svec).collect();
            for (local, &c0) in f0.iter().enumerate() {
                for (j, fi) in fis.iter().enumerate() {
                    if fi[local] != 0.0 {
                        rows.push(row + local);
                        cols.push(j);
                        vals.push(-fi[local]);
                    }
                }
                b.push(c0);
            }
            row += f0.len();
            cones.push(SupportedConeT::PSDTriangleConeT(d));
        }

        // The triplet constructor rejects an empty entry list, so the zero
        // objective matrix is built directly.
        let a = if vals.is_empty() {
            CscMatrix::zeros((row, n))
        } else {
            CscMatrix::new_from_triplets(row, n, rows, cols, vals)
        };
        let p = CscMatrix::zeros((n, n));
        let q = vec![0.0; n];
        let settings = DefaultSettings {
            verbose: false,
            max_iter: 200,
            tol_feas: 1e-11,
            tol_gap_abs: 1e-11,
            tol_gap_rel: 1e-11,
            ..Default::default()
        };
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings);
        solver.solve();
        let status = solver.solution.status;
        match status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                let x = solver.solution.x.clone();
                match verify_solution(problem, &x, 1e-7) {
                    Ok(()) => Ok(SdpOutcome::Feasible(x)),
                    Err(reason) => {
                        Ok(SdpOutcome::Unknown(format!("{status:?}, witness rejected: {reason}")))
                    }
                }
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                Ok(SdpOutcome::Infeasible(format!("{status:?}")))
            }
            other => Ok(SdpOutcome::Unknown(format!("{other:?}"))),
        }
    }
}

/// Resolves a backend by name: the bundled solver by default, `none` to
/// disable solving (exports remain available).
pub fn backend_from_name(name: Option<&str>) -> Result<Box<dyn SdpBackend>> {
    match name {
        None => Ok(Box::new(ClarabelBackend)),
        Some(n) if n.eq_ignore_ascii_case("clarabel") => Ok(Box::new(ClarabelBackend)),
        Some(n) if n.eq_ignore_ascii_case("none") => Err(Error::SolverUnavailable(
            "disabled by WAVESTAB_SOLVER=none".into(),
        )),
        Some(other) => Err(Error::SolverUnavailable(format!(
            "unknown solver '{other}' (supported: clarabel)"
        ))),
    }
}

/// Reads the WAVESTAB_SOLVER environment variable and resolves the backend.
pub fn backend_from_env() -> Result<Box<dyn SdpBackend>> {
    match std::env::var("WAVESTAB_SOLVER") {
        Ok(name) => backend_from_name(Some(name.as_str())),
        Err(_) => backend_from_name(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// X = [[x0, x1], [x1, x2]] with trace 1 and fixed off-diagonal t:
    /// feasible iff the best product x0 x2 = 1/4 is at least t^2.
    fn pinned_corner_problem(t: f64) -> SdpProblem {
        let basis = |i: usize, j: usize| {
            let mut m = DMatrix::<f64>::zeros(2, 2);
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
            m
        };
        SdpProblem {
            nvars: 3,
            equalities: vec![
                LinearRow { coeffs: vec![1.0, 0.0, 1.0], rhs: 1.0 },
                LinearRow { coeffs: vec![0.0, 1.0, 0.0], rhs: t },
            ],
            nonneg: vec![],
            psd: vec![AffineMatrixConstraint {
                constant: DMatrix::zeros(2, 2),
                coefficients: vec![basis(0, 0), basis(0, 1), basis(1, 1)],
            }],
        }
    }

    #[test]
    fn bundled_backend_separates_feasible_from_infeasible() {
        let backend = ClarabelBackend;
        match backend.solve(&pinned_corner_problem(0.4)).unwrap() {
            SdpOutcome::Feasible(x) => {
                assert!(verify_solution(&pinned_corner_problem(0.4), &x, 1e-7).is_ok());
            }
            other => panic!("expected feasible, got {other:?}"),
        }
        match backend.solve(&pinned_corner_problem(0.6)).unwrap() {
            SdpOutcome::Infeasible(_) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn verification_rejects_constraint_violations() {
        let problem = pinned_corner_problem(0.4);
        // Right trace, right corner, but indefinite.
        let bad = vec![0.9, 0.4, 0.1];
        let err = verify_solution(&problem, &bad, 1e-7).unwrap_err();
        assert!(err.contains("semidefinite"), "{err}");
        let wrong_trace = vec![0.8, 0.4, 0.1];
        assert!(verify_solution(&problem, &wrong_trace, 1e-7).is_err());
        assert!(verify_solution(&problem, &[0.5; 2], 1e-7).is_err());
    }

    #[test]
    fn nonnegative_rows_are_enforced() {
        let problem = SdpProblem {
            nvars: 1,
            equalities: vec![LinearRow { coeffs: vec![1.0], rhs: -2.0 }],
            nonneg: vec![LinearRow { coeffs: vec![1.0], rhs: 0.0 }],
            psd: vec![],
        };
        match ClarabelBackend.solve(&problem).unwrap() {
            SdpOutcome::Infeasible(_) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn backend_resolution_honors_names() {
        assert_eq!(backend_from_name(None).unwrap().name(), "clarabel");
        assert_eq!(backend_from_name(Some("Clarabel")).unwrap().name(), "clarabel");
        assert!(matches!(
            backend_from_name(Some("none")),
            Err(Error::SolverUnavailable(_))
        ));
        match backend_from_name(Some("mosek")) {
            Err(Error::SolverUnavailable(msg)) => assert!(msg.contains("mosek")),
            Err(other) => panic!("expected unavailable, got {other:?}"),
            Ok(b) => panic!("expected unavailable, got backend {}", b.name()),
        }
    }
}
