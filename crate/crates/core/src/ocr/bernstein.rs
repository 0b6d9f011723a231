//! Deterministic safe approximations of the Gaussian-location chance
//! constraints.
//!
//! For a node at `center + std * x`, `x ~ N(0, I_2)`, the clearance
//! `|q - center - std x|^2 + H^2 - cap` is the quadratic form
//! `x^T A x + 2 b^T x + c` with `A = std^2 I_2`, `b = std (center - q)`, and
//! `c = |q - center|^2 + H^2 - cap`. It is nonnegative with probability at
//! least `1 - level` whenever
//!
//! ```text
//! Tr(A) - sqrt(-2 ln level) eta + ln(level) zeta + c >= 0
//! |[vec(A); sqrt(2) b]| <= eta
//! zeta >= 0
//! ```
//!
//! The companion condition `zeta I + A >= 0` holds automatically because `A`
//! is a nonnegative multiple of the identity, so it is not emitted.

use std::f64::consts::SQRT_2;

use crate::conic::{add_inverse_product_bound, AffineExpr, ConicError, ConicProgram, VarId};
use crate::geom::Point;
use crate::scenario::UncertainNode;
use crate::wcr::surrogate::linearized_sq_distance;

/// Handles and data of one emitted Bernstein constraint set.
#[derive(Debug, Clone)]
pub struct BernsteinTriple {
    /// `Tr(A) = 2 std^2`.
    pub trace_term: f64,
    /// `b = std (center - q)`.
    pub b_vec: [AffineExpr; 2],
    /// `c` with the squared distance linearized at the expansion point.
    pub c_term: AffineExpr,
    /// Norm slack; absent when the error is degenerate (`std = 0`).
    pub eta: Option<VarId>,
    pub zeta: Option<VarId>,
    /// Upper bound on `coeff / (tau y)`.
    pub cap: VarId,
}

/// Emits the constraint set for one node and slot.
///
/// `coeff / (tau y) <= cap` is added through the inverse-product cone, and
/// `altitude_sq`, `q`, `center`, `std` must share one length unit.
#[allow(clippy::too_many_arguments)]
pub fn add_bernstein(
    program: &mut ConicProgram,
    q: &[AffineExpr; 2],
    q_tilde: Point,
    center: Point,
    std: f64,
    altitude_sq: f64,
    tau: AffineExpr,
    y: AffineExpr,
    coeff: f64,
    level: f64,
    tag: &str,
) -> Result<BernsteinTriple, ConicError> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(ConicError::InvalidProgram(format!("`{tag}`: bad standard deviation {std}")));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(ConicError::InvalidProgram(format!("`{tag}`: outage level {level} outside (0, 1]")));
    }
    let cap = program.add_nonneg(format!("{tag}.cap"));
    add_inverse_product_bound(program, tau, y, AffineExpr::var(cap), coeff, tag)?;

    let c_term = linearized_sq_distance(q, q_tilde, center) + altitude_sq - AffineExpr::var(cap);
    let b_vec = [
        (-q[0].clone() + center[0]) * std,
        (-q[1].clone() + center[1]) * std,
    ];
    let trace_term = 2.0 * std * std;
    if std == 0.0 {
        program.add_ge(c_term.clone(), AffineExpr::zero());
        return Ok(BernsteinTriple { trace_term, b_vec, c_term, eta: None, zeta: None, cap });
    }

    let eta = program.add_nonneg(format!("{tag}.eta"));
    let zeta = program.add_nonneg(format!("{tag}.zeta"));
    let a = std * std;
    program.add_soc(
        AffineExpr::var(eta),
        vec![
            AffineExpr::constant(a),
            AffineExpr::zero(),
            AffineExpr::zero(),
            AffineExpr::constant(a),
            b_vec[0].clone() * SQRT_2,
            b_vec[1].clone() * SQRT_2,
        ],
    );
    let ln_level = level.ln();
    program.add_ge(
        c_term.clone() + trace_term - AffineExpr::term(eta, (-2.0 * ln_level).sqrt()) + AffineExpr::term(zeta, ln_level),
        AffineExpr::zero(),
    );
    Ok(BernsteinTriple { trace_term, b_vec, c_term, eta: Some(eta), zeta: Some(zeta), cap })
}

/// Interference chance constraint `Pr{ s_l P <= gamma } >= 1 - phi` for one
/// PU and slot; `coeff / (tau gamma)` plays the role of `beta0 P / gamma`.
#[allow(clippy::too_many_arguments)]
pub fn bernstein_interference(
    program: &mut ConicProgram,
    q: &[AffineExpr; 2],
    q_tilde: Point,
    pu: &UncertainNode,
    tau: AffineExpr,
    gamma: AffineExpr,
    altitude_sq: f64,
    coeff: f64,
    phi: f64,
    tag: &str,
) -> Result<BernsteinTriple, ConicError> {
    let std = pu.std().unwrap_or(0.0);
    add_bernstein(program, q, q_tilde, pu.center_xy, std, altitude_sq, tau, gamma, coeff, phi, tag)
}

/// Eve rate chance constraint `Pr{ R_E <= log2(1 + varphi) } >= 1 - rho_bar`
/// for one Eve and slot; `coeff / (tau varphi)` plays the role of
/// `beta0 P / (noise varphi)`.
#[allow(clippy::too_many_arguments)]
pub fn bernstein_eve(
    program: &mut ConicProgram,
    q: &[AffineExpr; 2],
    q_tilde: Point,
    eve: &UncertainNode,
    tau: AffineExpr,
    varphi: AffineExpr,
    altitude_sq: f64,
    coeff: f64,
    rho_bar: f64,
    tag: &str,
) -> Result<BernsteinTriple, ConicError> {
    let std = eve.std().unwrap_or(0.0);
    add_bernstein(program, q, q_tilde, eve.center_xy, std, altitude_sq, tau, varphi, coeff, rho_bar, tag)
}

/// Smallest `eta` allowed by the norm constraint at a fixed waypoint.
pub fn eta_floor(q: Point, center: Point, std: f64) -> f64 {
    let a = std * std;
    let b2 = std * std * crate::geom::dist2(q, center);
    (2.0 * a * a + 2.0 * b2).sqrt()
}

/// Bernstein-safe lower bound on the clearance `|q - e|^2 + H^2` at a fixed
/// waypoint: `|q - c|^2 + H^2 + 2 std^2 - sqrt(-2 ln level) eta_floor`.
pub fn safe_clearance(q: Point, center: Point, std: f64, altitude_sq: f64, level: f64) -> f64 {
    crate::geom::dist2(q, center) + altitude_sq + 2.0 * std * std
        - (-2.0 * level.ln()).sqrt() * eta_floor(q, center, std)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_constant_at_center() {
        // q at the center: b = 0 and the SOC reduces to eta >= sqrt(2) std^2
        assert!((eta_floor([3.0, 4.0], [3.0, 4.0], 5.0) - SQRT_2 * 25.0).abs() < 1e-12);
    }

    #[test]
    fn zero_std_is_nominal() {
        assert_eq!(safe_clearance([30.0, 40.0], [0.0, 0.0], 0.0, 1e4, 0.2), 2500.0 + 1e4);
    }

    #[test]
    fn emitted_set_shapes() {
        let mut p = ConicProgram::new();
        let t = p.add_var("tau", Some(0.1), None);
        let g = p.add_nonneg("gamma");
        let qx = p.add_free("qx");
        let qy = p.add_free("qy");
        let q = [AffineExpr::var(qx), AffineExpr::var(qy)];
        let node = UncertainNode { center_xy: [1.0, 0.0], bounded_radius_m: None, gaussian_std_m: Some(0.05) };
        let b = bernstein_interference(&mut p, &q, [0.0, 0.0], &node, AffineExpr::var(t), AffineExpr::var(g), 1.0, 2.0, 0.2, "pu")
            .unwrap();
        assert!(b.eta.is_some() && b.zeta.is_some());
        assert!((b.trace_term - 0.005).abs() < 1e-15);
        assert_eq!(p.census().soc_by_dim.get(&7), Some(&1));
    }
}
