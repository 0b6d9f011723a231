//! First-order under-estimators of the convex terms that block convexity.
//!
//! Each function takes the decision quantities as affine expressions (pass
//! `AffineExpr::constant` to evaluate numerically) and the expansion point as
//! plain numbers.

use std::f64::consts::LN_2;

use crate::conic::AffineExpr;
use crate::geom::{self, Point};

/// Tangent of `-log2(phi + 1)` at `phi_tilde`; never above the true value.
pub fn taylor_phi(varphi: AffineExpr, varphi_tilde: f64) -> AffineExpr {
    let slope = 1.0 / ((varphi_tilde + 1.0) * LN_2);
    (varphi - varphi_tilde) * (-slope) - (varphi_tilde + 1.0).log2()
}

/// Tangent plane of `coeff / (tau (alpha - 1))` at `(tau_tilde, alpha_tilde)`;
/// never above the true value for `tau > 0`, `alpha > 1`.
pub fn taylor_theta(
    tau: AffineExpr,
    alpha: AffineExpr,
    tau_tilde: f64,
    alpha_tilde: f64,
    coeff: f64,
) -> AffineExpr {
    let a = alpha_tilde - 1.0;
    let f = 1.0 / (tau_tilde * a);
    let d_tau = -1.0 / (tau_tilde * tau_tilde * a);
    let d_alpha = -1.0 / (tau_tilde * a * a);
    ((tau - tau_tilde) * d_tau + (alpha - alpha_tilde) * d_alpha + f) * coeff
}

/// Tangent of `|q - center|^2` at `q_tilde`: `(q~ - c)^T (2 q - c - q~)`.
pub fn linearized_sq_distance(q: &[AffineExpr; 2], q_tilde: Point, center: Point) -> AffineExpr {
    let g = geom::sub(q_tilde, center);
    let mut e = AffineExpr::zero();
    for i in 0..2 {
        e += (q[i].clone() * 2.0 - center[i] - q_tilde[i]) * g[i];
    }
    e
}
