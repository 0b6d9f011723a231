//! Cone encodings for the two non-conic-looking convex constraints the
//! subproblems need.

use super::expr::{AffineExpr, VarId};
use super::program::ConicProgram;
use super::ConicError;

/// Auxiliary variables created by [`add_inverse_product_bound`].
#[derive(Debug, Clone, Copy)]
pub struct InverseProductAux {
    /// `u <= sqrt(x y)`
    pub u: VarId,
    /// `v <= sqrt(t r)`
    pub v: VarId,
}

/// Encodes `coeff / (x y) <= t` for positive `x, y, t`.
///
/// With `r = coeff^(1/3)` the constraint is `x y t r >= r^4`, a geometric
/// mean of four terms, which three rotated cones express exactly:
/// `x y >= u^2`, `t r >= v^2`, `u v >= r^2`.
pub fn add_inverse_product_bound(
    program: &mut ConicProgram,
    x: AffineExpr,
    y: AffineExpr,
    t: AffineExpr,
    coeff: f64,
    tag: &str,
) -> Result<InverseProductAux, ConicError> {
    if !(coeff > 0.0 && coeff.is_finite()) {
        return Err(ConicError::InvalidProgram(format!(
            "inverse product bound `{tag}` needs a positive coefficient, got {coeff}"
        )));
    }
    let r = coeff.cbrt();
    let u = program.add_nonneg(format!("{tag}.u"));
    let v = program.add_nonneg(format!("{tag}.v"));
    program.add_rotated_soc(x, y, vec![AffineExpr::var(u)]);
    program.add_rotated_soc(t, AffineExpr::constant(r), vec![AffineExpr::var(v)]);
    program.add_rotated_soc(AffineExpr::var(u), AffineExpr::var(v), vec![AffineExpr::constant(r)]);
    Ok(InverseProductAux { u, v })
}

/// Values of the auxiliaries that certify a point satisfying `coeff/(xy) <= t`.
pub fn inverse_product_witness(x: f64, y: f64, t: f64, coeff: f64) -> (f64, f64) {
    let r = coeff.cbrt();
    ((x * y).max(0.0).sqrt(), (t * r).max(0.0).sqrt())
}

/// Encodes `(1/N) sum_n 1/tau_n <= budget` with one rotated cone per slot
/// (`p_n tau_n >= 1`) and `sum_n p_n <= N budget`. Returns the `p_n`.
pub fn add_reciprocal_sum_bound(
    program: &mut ConicProgram,
    tau: &[AffineExpr],
    budget: f64,
    tag: &str,
) -> Vec<VarId> {
    let p: Vec<VarId> = (0..tau.len())
        .map(|n| program.add_nonneg(format!("{tag}.p[{n}]")))
        .collect();
    for (pn, tn) in p.iter().zip(tau) {
        program.add_rotated_soc(AffineExpr::var(*pn), tn.clone(), vec![AffineExpr::constant(1.0)]);
    }
    let sum = p
        .iter()
        .fold(AffineExpr::zero(), |acc, v| acc + AffineExpr::var(*v));
    program.add_le(sum, AffineExpr::constant(tau.len() as f64 * budget));
    p
}
