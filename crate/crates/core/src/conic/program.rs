use std::collections::BTreeMap;

use nalgebra::Matrix3;
use serde::Serialize;

use super::expr::{AffineExpr, VarId};
use super::ConicError;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `expr <= 0`
    Le,
    /// `expr == 0`
    Eq,
    /// `expr >= 0`
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub expr: AffineExpr,
    pub sense: Sense,
}

/// Second-order cone memberships.
#[derive(Debug, Clone, PartialEq)]
pub enum SocBlock {
    /// `|tail| <= head`
    Standard { head: AffineExpr, tail: Vec<AffineExpr> },
    /// `a * b >= |tail|^2` with `a, b >= 0`
    Rotated {
        a: AffineExpr,
        b: AffineExpr,
        tail: Vec<AffineExpr>,
    },
}

impl SocBlock {
    /// Cone dimension, counting the head (or both rotated heads).
    pub fn dim(&self) -> usize {
        match self {
            SocBlock::Standard { tail, .. } => 1 + tail.len(),
            SocBlock::Rotated { tail, .. } => 2 + tail.len(),
        }
    }

    /// Distance outside the cone in the same units as the entries (0 if inside).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            SocBlock::Standard { head, tail } => {
                let t = tail.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
                (t - head.eval(x)).max(0.0)
            }
            SocBlock::Rotated { a, b, tail } => {
                let (a, b) = (a.eval(x), b.eval(x));
                let t2 = tail.iter().map(|e| e.eval(x).powi(2)).sum::<f64>();
                // equivalent standard form |(a - b, 2 tail)| <= a + b
                let lhs = ((a - b).powi(2) + 4.0 * t2).sqrt();
                ((lhs - (a + b)) / 2.0).max(0.0)
            }
        }
    }
}

/// Symmetric 3x3 matrix of affine expressions constrained to be PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub entries: [[AffineExpr; 3]; 3],
}

impl PsdBlock {
    pub fn eval(&self, x: &[f64]) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.entries[i][j].eval(x))
    }

    pub fn min_eigenvalue(&self, x: &[f64]) -> f64 {
        self.eval(x).symmetric_eigenvalues().min()
    }
}

/// `weight * log2(var)` added to the maximized objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTerm {
    pub weight: f64,
    pub var: VarId,
}

/// Constraint counts by kind, used to audit subproblem structure.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Census {
    pub variables: usize,
    pub linear_eq: usize,
    pub linear_ineq: usize,
    pub bounds: usize,
    /// Standard SOCs by dimension.
    pub soc_by_dim: BTreeMap<usize, usize>,
    /// Rotated SOCs by dimension.
    pub rotated_soc_by_dim: BTreeMap<usize, usize>,
    pub psd_3x3: usize,
    pub log_terms: usize,
}

/// One convex subproblem: maximize `linear_objective + sum w log2(v)` over
/// affine, second-order-cone, and 3x3 PSD constraints.
#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    pub variables: Vec<Variable>,
    pub linear_constraints: Vec<LinearConstraint>,
    pub soc_blocks: Vec<SocBlock>,
    pub psd_blocks: Vec<PsdBlock>,
    pub log_terms: Vec<LogTerm>,
    pub linear_objective: AffineExpr,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<f64>, upper: Option<f64>) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, None, None)
    }

    pub fn add_nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, Some(0.0), None)
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    /// Tightens the bounds of an existing variable.
    pub fn bound(&mut self, id: VarId, lower: Option<f64>, upper: Option<f64>) {
        let v = &mut self.variables[id.0];
        if let Some(l) = lower {
            v.lower = Some(v.lower.map_or(l, |o| o.max(l)));
        }
        if let Some(u) = upper {
            v.upper = Some(v.upper.map_or(u, |o| o.min(u)));
        }
    }

    pub fn add_linear(&mut self, expr: AffineExpr, sense: Sense) {
        self.linear_constraints.push(LinearConstraint {
            expr: expr.simplified(),
            sense,
        });
    }

    /// `lhs <= rhs`
    pub fn add_le(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.add_linear(lhs - rhs, Sense::Le);
    }

    /// `lhs >= rhs`
    pub fn add_ge(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.add_linear(lhs - rhs, Sense::Ge);
    }

    /// `lhs == rhs`
    pub fn add_eq(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.add_linear(lhs - rhs, Sense::Eq);
    }

    /// `|tail| <= head`
    pub fn add_soc(&mut self, head: AffineExpr, tail: Vec<AffineExpr>) {
        self.soc_blocks.push(SocBlock::Standard {
            head: head.simplified(),
            tail: tail.iter().map(AffineExpr::simplified).collect(),
        });
    }

    /// `a * b >= |tail|^2`, `a, b >= 0`
    pub fn add_rotated_soc(&mut self, a: AffineExpr, b: AffineExpr, tail: Vec<AffineExpr>) {
        self.soc_blocks.push(SocBlock::Rotated {
            a: a.simplified(),
            b: b.simplified(),
            tail: tail.iter().map(AffineExpr::simplified).collect(),
        });
    }

    /// Adds a 3x3 PSD constraint. The matrix must be symmetric entry by entry.
    pub fn add_psd3(&mut self, entries: [[AffineExpr; 3]; 3]) -> Result<(), ConicError> {
        let entries = entries.map(|row| row.map(|e| e.simplified()));
        for i in 0..3 {
            for j in (i + 1)..3 {
                if entries[i][j] != entries[j][i] {
                    return Err(ConicError::InvalidProgram(format!(
                        "PSD block entry ({i},{j}) differs from ({j},{i})"
                    )));
                }
            }
        }
        self.psd_blocks.push(PsdBlock { entries });
        Ok(())
    }

    /// Only 3x3 PSD blocks are supported.
    pub fn add_psd(&mut self, entries: Vec<Vec<AffineExpr>>) -> Result<(), ConicError> {
        if entries.len() != 3 || entries.iter().any(|r| r.len() != 3) {
            return Err(ConicError::InvalidProgram(format!(
                "PSD blocks must be 3x3, got {}x{}",
                entries.len(),
                entries.first().map_or(0, Vec::len)
            )));
        }
        let mut it = entries.into_iter().map(|r| {
            let mut c = r.into_iter();
            [c.next().unwrap(), c.next().unwrap(), c.next().unwrap()]
        });
        self.add_psd3([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
    }

    /// Adds `weight * log2(var)` to the objective. `var` needs a positive lower bound.
    pub fn add_log_term(&mut self, weight: f64, var: VarId) -> Result<(), ConicError> {
        match self.variables[var.0].lower {
            Some(l) if l > 0.0 => {}
            _ => {
                return Err(ConicError::InvalidProgram(format!(
                    "log term on `{}` needs a strictly positive lower bound",
                    self.variables[var.0].name
                )))
            }
        }
        self.log_terms.push(LogTerm { weight, var });
        Ok(())
    }

    pub fn add_objective(&mut self, expr: AffineExpr) {
        self.linear_objective += expr;
        self.linear_objective = self.linear_objective.simplified();
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.linear_objective.eval(x)
            + self
                .log_terms
                .iter()
                .map(|t| t.weight * x[t.var.0].log2())
                .sum::<f64>()
    }

    pub fn census(&self) -> Census {
        let mut c = Census {
            variables: self.variables.len(),
            psd_3x3: self.psd_blocks.len(),
            log_terms: self.log_terms.len(),
            ..Census::default()
        };
        for l in &self.linear_constraints {
            match l.sense {
                Sense::Eq => c.linear_eq += 1,
                _ => c.linear_ineq += 1,
            }
        }
        c.bounds = self
            .variables
            .iter()
            .map(|v| v.lower.is_some() as usize + v.upper.is_some() as usize)
            .sum();
        for s in &self.soc_blocks {
            let map = match s {
                SocBlock::Standard { .. } => &mut c.soc_by_dim,
                SocBlock::Rotated { .. } => &mut c.rotated_soc_by_dim,
            };
            *map.entry(s.dim()).or_default() += 1;
        }
        c
    }

    /// Checks that all expressions reference declared variables and are finite.
    pub fn check(&self) -> Result<(), ConicError> {
        let n = self.variables.len();
        let ok = |e: &AffineExpr| {
            e.constant.is_finite() && e.terms.iter().all(|(v, c)| v.0 < n && c.is_finite())
        };
        let mut all: Vec<&AffineExpr> = vec![&self.linear_objective];
        all.extend(self.linear_constraints.iter().map(|l| &l.expr));
        for s in &self.soc_blocks {
            match s {
                SocBlock::Standard { head, tail } => {
                    all.push(head);
                    all.extend(tail);
                }
                SocBlock::Rotated { a, b, tail } => {
                    all.push(a);
                    all.push(b);
                    all.extend(tail);
                }
            }
        }
        for p in &self.psd_blocks {
            all.extend(p.entries.iter().flatten());
        }
        if !all.into_iter().all(ok) {
            return Err(ConicError::InvalidProgram(
                "expression references an unknown variable or has a non-finite coefficient".into(),
            ));
        }
        for v in &self.variables {
            if let (Some(l), Some(u)) = (v.lower, v.upper) {
                if l > u {
                    return Err(ConicError::InvalidProgram(format!(
                        "variable `{}` has lower bound {l} above upper bound {u}",
                        v.name
                    )));
                }
            }
        }
        for t in &self.log_terms {
            if t.var.0 >= n || !t.weight.is_finite() {
                return Err(ConicError::InvalidProgram("bad log term".into()));
            }
        }
        Ok(())
    }

    /// Largest constraint violation at `x`, each residual relative to the
    /// size of the terms it is made of (floored at 1): bound and linear
    /// residuals, distance outside each SOC, and minus the smallest
    /// eigenvalue of each PSD block.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let size = |e: &AffineExpr| {
            let s = e.constant.abs() + e.terms.iter().map(|(v, c)| (c * x[v.0]).abs()).sum::<f64>();
            s.max(1.0)
        };
        let mut worst: f64 = 0.0;
        for (v, xi) in self.variables.iter().zip(x) {
            if let Some(l) = v.lower {
                worst = worst.max((l - xi) / l.abs().max(1.0));
            }
            if let Some(u) = v.upper {
                worst = worst.max((xi - u) / u.abs().max(1.0));
            }
        }
        for l in &self.linear_constraints {
            let r = l.expr.eval(x);
            let r = match l.sense {
                Sense::Le => r,
                Sense::Ge => -r,
                Sense::Eq => r.abs(),
            };
            worst = worst.max(r / size(&l.expr));
        }
        for s in &self.soc_blocks {
            let scale = match s {
                SocBlock::Standard { head, tail } => tail.iter().map(size).fold(size(head), f64::max),
                SocBlock::Rotated { a, b, tail } => tail.iter().map(size).fold(size(a).max(size(b)), f64::max),
            };
            worst = worst.max(s.violation(x) / scale);
        }
        for p in &self.psd_blocks {
            let scale = p.entries.iter().flatten().map(size).fold(1.0, f64::max);
            worst = worst.max(-p.min_eigenvalue(x) / scale);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_3x3_psd_is_rejected() {
        let mut p = ConicProgram::new();
        let m = vec![vec![AffineExpr::constant(1.0); 2]; 2];
        assert!(matches!(p.add_psd(m), Err(ConicError::InvalidProgram(_))));
        let m = vec![vec![AffineExpr::constant(1.0); 3]; 3];
        p.add_psd(m).unwrap();
        assert_eq!(p.census().psd_3x3, 1);
    }

    #[test]
    fn asymmetric_psd_is_rejected() {
        let mut p = ConicProgram::new();
        let x = p.add_free("x");
        let mut m: [[AffineExpr; 3]; 3] = Default::default();
        m[0][1] = AffineExpr::var(x);
        assert!(p.add_psd3(m).is_err());
    }

    #[test]
    fn log_term_requires_positive_lower_bound() {
        let mut p = ConicProgram::new();
        let a = p.add_nonneg("a");
        assert!(p.add_log_term(1.0, a).is_err());
        let b = p.add_var("b", Some(1.0 + 1e-6), None);
        p.add_log_term(1.0, b).unwrap();
    }

    #[test]
    fn violation_measures() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x", Some(0.0), Some(1.0));
        let y = p.add_free("y");
        p.add_soc(AffineExpr::var(x), vec![AffineExpr::var(y)]);
        p.add_rotated_soc(AffineExpr::var(x), AffineExpr::constant(1.0), vec![AffineExpr::var(y)]);
        assert_eq!(p.max_violation(&[1.0, 1.0]), 0.0);
        assert!(p.max_violation(&[0.5, 1.0]) > 0.0);
        assert!((p.max_violation(&[1.5, 0.0]) - 0.5).abs() < 1e-15);
        let c = p.census();
        assert_eq!(c.soc_by_dim.get(&2), Some(&1));
        assert_eq!(c.rotated_soc_by_dim.get(&3), Some(&1));
    }
}
