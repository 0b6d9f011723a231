use std::f64::consts::{LN_2, SQRT_2};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus as ClStatus, SupportedConeT,
};

use super::expr::AffineExpr;
use super::program::{ConicProgram, Sense, SocBlock};
use super::{ConicError, ConicSolution, SolverStatus, StatusKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Backend feasibility tolerance; kept below [`super::TOL_FEAS`].
    pub tol_feas: f64,
    /// Backend relative and absolute gap tolerance.
    pub tol_gap: f64,
    pub max_iter: u32,
    pub time_limit_s: f64,
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            max_iter: 200,
            time_limit_s: f64::INFINITY,
            verbose: std::env::var_os("UAV_SECRECY_SOLVER_VERBOSE").is_some(),
        }
    }
}

pub trait ConicBackend {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution, ConicError>;
}

/// Interior-point backend supporting SOC, exponential, and PSD cones.
#[derive(Debug, Clone, Default)]
pub struct ClarabelBackend {
    pub settings: SolverSettings,
}

impl ClarabelBackend {
    pub fn new(settings: SolverSettings) -> Self {
        Self { settings }
    }
}

/// Solves with the default backend and settings.
pub fn solve(program: &ConicProgram) -> Result<ConicSolution, ConicError> {
    ClarabelBackend::default().solve(program)
}

/// Rows of `s = b - A x` for the backend, grouped by cone.
struct Rows {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    /// Appends one row whose slack equals `e(x)`.
    fn push(&mut self, e: &AffineExpr) {
        let r = self.b.len();
        for (v, c) in &e.terms {
            if *c != 0.0 {
                self.rows.push(r);
                self.cols.push(v.0);
                self.vals.push(-c);
            }
        }
        self.b.push(e.constant);
    }
}

impl ConicBackend for ClarabelBackend {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution, ConicError> {
        program.check()?;
        let n_vars = program.num_vars();
        let n = n_vars + program.log_terms.len();
        let mut rows = Rows {
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
            b: Vec::new(),
        };
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

        let eqs: Vec<_> = program
            .linear_constraints
            .iter()
            .filter(|l| l.sense == Sense::Eq)
            .collect();
        if !eqs.is_empty() {
            for l in &eqs {
                rows.push(&l.expr);
            }
            cones.push(SupportedConeT::ZeroConeT(eqs.len()));
        }

        let start = rows.b.len();
        for l in &program.linear_constraints {
            match l.sense {
                Sense::Ge => rows.push(&l.expr),
                Sense::Le => rows.push(&(-l.expr.clone())),
                Sense::Eq => {}
            }
        }
        for (i, v) in program.variables.iter().enumerate() {
            let x = AffineExpr::var(super::VarId(i));
            if let Some(l) = v.lower {
                rows.push(&(x.clone() - l));
            }
            if let Some(u) = v.upper {
                rows.push(&(-x + u));
            }
        }
        if rows.b.len() > start {
            cones.push(SupportedConeT::NonnegativeConeT(rows.b.len() - start));
        }

        for s in &program.soc_blocks {
            match s {
                SocBlock::Standard { head, tail } => {
                    rows.push(head);
                    for t in tail {
                        rows.push(t);
                    }
                    cones.push(SupportedConeT::SecondOrderConeT(1 + tail.len()));
                }
                SocBlock::Rotated { a, b, tail } => {
                    rows.push(&(a.clone() + b.clone()));
                    rows.push(&(a.clone() - b.clone()));
                    for t in tail {
                        rows.push(&(t.clone() * 2.0));
                    }
                    cones.push(SupportedConeT::SecondOrderConeT(2 + tail.len()));
                }
            }
        }

        // log2(v) >= t  <=>  (t, 1, v) in K_exp = {(x, y, z) : y exp(x / y) <= z}
        for (i, term) in program.log_terms.iter().enumerate() {
            let t = super::VarId(n_vars + i);
            rows.push(&AffineExpr::var(t));
            rows.push(&AffineExpr::constant(1.0));
            rows.push(&AffineExpr::var(term.var));
            cones.push(SupportedConeT::ExponentialConeT());
        }

        // upper triangle by columns, off-diagonals scaled by sqrt(2)
        for p in &program.psd_blocks {
            for j in 0..3 {
                for i in 0..=j {
                    let e = &p.entries[i][j];
                    if i == j {
                        rows.push(e);
                    } else {
                        rows.push(&(e.clone() * SQRT_2));
                    }
                }
            }
            cones.push(SupportedConeT::PSDTriangleConeT(3));
        }

        let m = rows.b.len();
        let mut q = vec![0.0; n];
        for (v, c) in &program.linear_objective.terms {
            q[v.0] -= c;
        }
        for (i, term) in program.log_terms.iter().enumerate() {
            q[n_vars + i] -= term.weight / LN_2;
        }
        let p_mat = CscMatrix::<f64>::zeros((n, n));
        let a_mat = CscMatrix::new_from_triplets(m, n, rows.rows, rows.cols, rows.vals);

        // Stalled solves are retried with more conservative linear algebra;
        // the first attempt that reaches a clean status wins.
        let mut best: Option<ConicSolution> = None;
        for attempt in 0..RETRIES.len() {
            let sol = self.attempt(program, &p_mat, &q, &a_mat, &rows.b, &cones, attempt)?;
            let done = sol.status.kind != StatusKind::NumericalFailure;
            let better = best.as_ref().is_none_or(|b| sol.max_violation < b.max_violation);
            if done || better {
                best = Some(sol);
            }
            if done {
                break;
            }
        }
        Ok(best.expect("at least one attempt"))
    }
}

/// Settings tweaks for successive attempts: (static regularization,
/// refinement steps, max step fraction).
const RETRIES: [(f64, u32, f64); 3] = [(1e-8, 10, 0.99), (1e-7, 50, 0.95), (1e-6, 100, 0.9)];

impl ClarabelBackend {
    #[allow(clippy::too_many_arguments)]
    fn attempt(
        &self,
        program: &ConicProgram,
        p_mat: &CscMatrix<f64>,
        q: &[f64],
        a_mat: &CscMatrix<f64>,
        b: &[f64],
        cones: &[SupportedConeT<f64>],
        attempt: usize,
    ) -> Result<ConicSolution, ConicError> {
        let n_vars = program.num_vars();
        let (reg, refine, step) = RETRIES[attempt];
        let s = &self.settings;
        let settings = DefaultSettingsBuilder::default()
            .verbose(s.verbose)
            .max_iter(s.max_iter)
            .time_limit(s.time_limit_s)
            .tol_feas(s.tol_feas)
            .tol_gap_abs(s.tol_gap)
            .tol_gap_rel(s.tol_gap)
            .static_regularization_constant(reg)
            .iterative_refinement_max_iter(refine)
            .max_step_fraction(step)
            .build()
            .map_err(|e| ConicError::Backend(format!("{e:?}")))?;
        let mut solver = DefaultSolver::new(p_mat, q, a_mat, b, cones, settings)
            .map_err(|e| ConicError::Backend(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;

        let values: Vec<f64> = sol.x.iter().take(n_vars).copied().collect();
        let finite = values.iter().all(|v| v.is_finite());
        let max_violation = if finite {
            program.max_violation(&values)
        } else {
            f64::INFINITY
        };
        let value_objective = if finite {
            program.objective_value(&values)
        } else {
            f64::NAN
        };
        let diagnostics = format!(
            "backend status {:?}, iterations {}, primal residual {:.3e}, dual residual {:.3e}, max violation {:.3e}",
            sol.status, sol.iterations, sol.r_prim, sol.r_dual, max_violation
        );
        let kind = match sol.status {
            ClStatus::Solved => StatusKind::Optimal,
            ClStatus::PrimalInfeasible | ClStatus::AlmostPrimalInfeasible => StatusKind::Infeasible,
            ClStatus::DualInfeasible | ClStatus::AlmostDualInfeasible => StatusKind::Unbounded,
            ClStatus::MaxIterations | ClStatus::MaxTime => StatusKind::IterationLimit,
            _ => StatusKind::NumericalFailure,
        };
        let optimal = kind == StatusKind::Optimal;
        Ok(ConicSolution {
            status: SolverStatus {
                kind,
                objective: optimal.then_some(value_objective),
                duals: optimal.then(|| sol.z.clone()),
                diagnostics,
            },
            values,
            value_objective,
            max_violation,
            iterations: sol.iterations,
            solve_time_s: sol.solve_time,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{ConicProgram, DELTA, TOL_FEAS};
    use super::*;

    #[test]
    fn maximize_log_with_cap() {
        let mut p = ConicProgram::new();
        let a = p.add_var("alpha", Some(1.0 + DELTA), Some(2.0));
        p.add_log_term(1.0, a).unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.status.kind, StatusKind::Optimal);
        assert!((s.values[a.0] - 2.0).abs() < 1e-6);
        assert!((s.status.objective.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_feasible_set_is_infeasible() {
        let mut p = ConicProgram::new();
        let a = p.add_var("alpha", Some(1.0 + DELTA), None);
        p.add_le(AffineExpr::var(a), AffineExpr::constant(0.5));
        p.add_log_term(1.0, a).unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.status.kind, StatusKind::Infeasible);
        assert!(s.status.objective.is_none());
    }

    #[test]
    fn unbounded_is_reported() {
        let mut p = ConicProgram::new();
        let x = p.add_nonneg("x");
        p.add_objective(AffineExpr::var(x));
        let s = solve(&p).unwrap();
        assert_eq!(s.status.kind, StatusKind::Unbounded);
    }

    #[test]
    fn small_lmi_with_known_optimum() {
        // max t s.t. [[1, t], [t, 1]] PSD, embedded in a 3x3 block
        let mut p = ConicProgram::new();
        let t = p.add_free("t");
        let one = AffineExpr::constant(1.0);
        let z = AffineExpr::zero();
        let tv = AffineExpr::var(t);
        p.add_psd3([
            [one.clone(), tv.clone(), z.clone()],
            [tv, one.clone(), z.clone()],
            [z.clone(), z, one],
        ])
        .unwrap();
        p.add_objective(AffineExpr::var(t));
        let s = solve(&p).unwrap();
        assert_eq!(s.status.kind, StatusKind::Optimal);
        assert!((s.values[t.0] - 1.0).abs() < 1e-6);
        assert!(s.max_violation < TOL_FEAS);
    }

    #[test]
    fn rotated_cone_is_honored() {
        // max x s.t. x * 1 <= ... : minimize y subject to y * 2 >= 3^2 -> y = 4.5
        let mut p = ConicProgram::new();
        let y = p.add_nonneg("y");
        p.add_rotated_soc(AffineExpr::var(y), AffineExpr::constant(2.0), vec![AffineExpr::constant(3.0)]);
        p.add_objective(-AffineExpr::var(y));
        let s = solve(&p).unwrap();
        assert!((s.values[y.0] - 4.5).abs() < 1e-6);
    }

    #[test]
    fn iteration_limit_is_surfaced() {
        let mut p = ConicProgram::new();
        let t = p.add_free("t");
        let x = p.add_free("x");
        p.add_soc(AffineExpr::var(t), vec![AffineExpr::var(x) - 3.0]);
        p.add_objective(-AffineExpr::var(t));
        let backend = ClarabelBackend::new(SolverSettings {
            max_iter: 1,
            ..SolverSettings::default()
        });
        let s = backend.solve(&p).unwrap();
        assert_eq!(s.status.kind, StatusKind::IterationLimit);
    }
}
