//! Intermediate representation of one convex subproblem and the solver
//! backend contract.
//!
//! Programs are *maximization* problems: a linear objective plus weighted
//! `log2` terms, subject to affine constraints, second-order cones (standard
//! and rotated), and 3x3 PSD blocks. [`ClarabelBackend`] routes the log terms
//! to exponential cones, so nothing is linearized here.

mod backend;
mod cbf;
mod expr;
mod program;
pub mod reformulate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{solve, ClarabelBackend, ConicBackend, SolverSettings};
pub use cbf::to_cbf;
pub use expr::{AffineExpr, VarId};
pub use program::{Census, ConicProgram, LinearConstraint, LogTerm, PsdBlock, Sense, SocBlock, Variable};
pub use reformulate::{add_inverse_product_bound, add_reciprocal_sum_bound, InverseProductAux};

/// Absolute tolerance on constraint residuals of an accepted solution.
pub const TOL_FEAS: f64 = 1e-7;
/// Relative optimality gap of an accepted solution.
pub const TOL_GAP: f64 = 1e-7;
/// Margin used to express `alpha > 1` as `alpha >= 1 + DELTA`.
pub const DELTA: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("backend setup failed: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusKind {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
    IterationLimit,
}

impl StatusKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StatusKind::Optimal => "optimal",
            StatusKind::Infeasible => "infeasible",
            StatusKind::Unbounded => "unbounded",
            StatusKind::NumericalFailure => "numerical_failure",
            StatusKind::IterationLimit => "iteration_limit",
        }
    }
}

impl std::fmt::Display for StatusKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one backend solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverStatus {
    pub kind: StatusKind,
    /// Objective of the maximization, present only when `kind` is optimal.
    pub objective: Option<f64>,
    /// Conic duals in backend row order, when optimal.
    pub duals: Option<Vec<f64>>,
    /// Backend status text and residuals.
    pub diagnostics: String,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolverStatus,
    /// One value per program variable (backend auxiliaries stripped).
    pub values: Vec<f64>,
    /// Objective of the program evaluated at `values`.
    pub value_objective: f64,
    /// [`ConicProgram::max_violation`] at `values`.
    pub max_violation: f64,
    pub iterations: u32,
    pub solve_time_s: f64,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status.kind == StatusKind::Optimal
    }
}
