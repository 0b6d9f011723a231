use crate::conic::{AffineExpr, ConicError};
use crate::geom::Point;

use super::surrogate::linearized_sq_distance;

/// `c~ = (q~ - c)^T (2q - c - q~) + H^2 - cap`: the linearized clearance
/// `|q - c|^2 + H^2 - cap` at the nominal location.
pub fn linearized_clearance(
    q: &[AffineExpr; 2],
    slack_cap: AffineExpr,
    center: Point,
    q_tilde: Point,
    altitude_sq: f64,
) -> AffineExpr {
    linearized_sq_distance(q, q_tilde, center) + altitude_sq - slack_cap
}

/// Robust counterpart of `|q - (center + d)|^2 + H^2 >= cap` for all
/// `|d| <= radius`:
///
/// ```text
/// [ (m + 1) I_2        -(q - center)        ]
/// [ -(q - center)^T    c~ - m radius^2      ]  >= 0,   m >= 0
/// ```
///
/// where `m` is the multiplier and `c~` is [`linearized_clearance`]. Every
/// entry is affine in `q`, `cap`, and `m`.
pub fn s_procedure_lmi(
    q: &[AffineExpr; 2],
    slack_cap: AffineExpr,
    multiplier: AffineExpr,
    center: Point,
    radius: f64,
    q_tilde: Point,
    altitude_sq: f64,
) -> Result<[[AffineExpr; 3]; 3], ConicError> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(ConicError::InvalidProgram(format!(
            "uncertainty radius must be finite and nonnegative, got {radius}"
        )));
    }
    let diag = multiplier.clone() + 1.0;
    let off = [-(q[0].clone() - center[0]), -(q[1].clone() - center[1])];
    let corner = linearized_clearance(q, slack_cap, center, q_tilde, altitude_sq) - multiplier * (radius * radius);
    Ok([
        [diag.clone(), AffineExpr::zero(), off[0].clone()],
        [AffineExpr::zero(), diag, off[1].clone()],
        [off[0].clone(), off[1].clone(), corner],
    ])
}

#[cfg(test)]
mod tests {
    use nalgebra::Matrix3;

    use super::*;

    fn eval(m: &[[AffineExpr; 3]; 3]) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| m[i][j].eval(&[]))
    }

    fn c(x: f64) -> AffineExpr {
        AffineExpr::constant(x)
    }

    #[test]
    fn degenerate_geometry_is_block_diagonal() {
        let q = [c(3.0), c(4.0)];
        for cap in [0.5, 1.0, 1.5] {
            let m = eval(&s_procedure_lmi(&q, c(cap), c(0.0), [3.0, 4.0], 2.0, [3.0, 4.0], 1.0).unwrap());
            assert_eq!(m[(0, 2)], 0.0);
            assert_eq!(m[(2, 2)], 1.0 - cap);
            let psd = m.symmetric_eigenvalues().min() >= -1e-12;
            assert_eq!(psd, cap <= 1.0);
        }
    }

    #[test]
    fn negative_radius_rejected() {
        let q = [c(0.0), c(0.0)];
        assert!(s_procedure_lmi(&q, c(0.0), c(0.0), [0.0, 0.0], -1.0, [0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn zero_radius_matches_nominal_condition() {
        // with radius 0 the LMI is feasible for some m >= 0 iff c~ >= 0 (large m)
        let q = [c(1.0), c(0.5)];
        for cap in [1.5, 2.0, 2.25, 2.5, 3.0] {
            let nominal = 1.25 + 1.0 - cap;
            let feasible = [0.0, 1.0, 10.0, 1e3, 1e6].iter().any(|&m| {
                let lmi = eval(&s_procedure_lmi(&q, c(cap), c(m), [0.0, 0.0], 0.0, [1.0, 0.5], 1.0).unwrap());
                lmi.symmetric_eigenvalues().min() >= -1e-9
            });
            assert_eq!(feasible, nominal >= 1e-5, "cap {cap}");
        }
    }
}
