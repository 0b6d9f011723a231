//! Randomized equivalence checks between each reformulation helper and an
//! independent closed form or sampling oracle. Every check runs 10^4 cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use uav_secrecy::conic::reformulate::inverse_product_witness;
use uav_secrecy::conic::{add_inverse_product_bound, add_reciprocal_sum_bound, AffineExpr, ConicProgram, VarId};
use uav_secrecy::geom::{self, Point};
use uav_secrecy::ocr::bernstein::{add_bernstein, eta_floor, safe_clearance};
use uav_secrecy::validation::grid_max_gain;
use uav_secrecy::wcr::{linearized_clearance, linearized_sq_distance, s_procedure_lmi, taylor_phi, taylor_theta};
use uav_secrecy::{channel, UncertainNode};

const CASES: usize = 10_000;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (r.gen_range(lo.ln()..hi.ln())).exp()
}

fn point(r: &mut ChaCha8Rng, span: f64) -> Point {
    [r.gen_range(-span..span), r.gen_range(-span..span)]
}

fn c(x: f64) -> AffineExpr {
    AffineExpr::constant(x)
}

#[test]
pub fn inverse_product_cone_matches_closed_form() {
    let mut r = rng(1);
    let (mut feasible, mut infeasible) = (0, 0);
    for _ in 0..CASES {
        let x = log_uniform(&mut r, 1e-3, 1e3);
        let y = log_uniform(&mut r, 1e-3, 1e3);
        let coeff = log_uniform(&mut r, 1e-3, 1e3);
        let target = coeff / (x * y);
        let t = target * log_uniform(&mut r, 0.2, 5.0);

        let mut p = ConicProgram::new();
        let vars: Vec<VarId> = ["x", "y", "t"].iter().map(|n| p.add_nonneg(*n)).collect();
        let e = |i: usize| AffineExpr::var(vars[i]);
        add_inverse_product_bound(&mut p, e(0), e(1), e(2), coeff, "ip").unwrap();

        // the witness maximizes u v, so it certifies exactly the feasible triples
        let (u, v) = inverse_product_witness(x, y, t, coeff);
        let violation = p.max_violation(&[x, y, t, u, v]);
        if t >= target * (1.0 + 1e-9) {
            feasible += 1;
            assert!(violation <= 1e-9, "x={x} y={y} t={t} coeff={coeff}: violation {violation}");
        } else if t <= target * (1.0 - 1e-9) {
            infeasible += 1;
            assert!(violation > 0.0, "x={x} y={y} t={t} coeff={coeff}: accepted");
        }
    }
    assert!(feasible > 1000 && infeasible > 1000);
}

#[test]
pub fn reciprocal_sum_cone_matches_closed_form() {
    let mut r = rng(2);
    let (mut feasible, mut infeasible) = (0, 0);
    for _ in 0..CASES {
        let n = r.gen_range(1..=12);
        let tau: Vec<f64> = (0..n).map(|_| log_uniform(&mut r, 0.05, 50.0)).collect();
        let mean_inv = tau.iter().map(|t| 1.0 / t).sum::<f64>() / n as f64;
        let budget = mean_inv * log_uniform(&mut r, 0.5, 2.0);

        let mut p = ConicProgram::new();
        let vars: Vec<VarId> = (0..n).map(|i| p.add_nonneg(format!("tau{i}"))).collect();
        let exprs: Vec<AffineExpr> = vars.iter().map(|v| AffineExpr::var(*v)).collect();
        add_reciprocal_sum_bound(&mut p, &exprs, budget, "rs");

        // p_n = 1/tau_n is the cheapest witness for every slot
        let mut x = tau.clone();
        x.extend(tau.iter().map(|t| 1.0 / t));
        let violation = p.max_violation(&x);
        if mean_inv <= budget * (1.0 - 1e-9) {
            feasible += 1;
            assert!(violation <= 1e-9, "{tau:?} budget {budget}: violation {violation}");
        } else if mean_inv >= budget * (1.0 + 1e-9) {
            infeasible += 1;
            assert!(violation > 0.0, "{tau:?} budget {budget}: accepted");
        }
    }
    assert!(feasible > 1000 && infeasible > 1000);
}

#[test]
pub fn phi_tangent_underestimates() {
    let mut r = rng(3);
    for _ in 0..CASES {
        let at = log_uniform(&mut r, 1e-4, 1e3);
        let phi = log_uniform(&mut r, 1e-4, 1e3);
        let exact = -(1.0 + phi).log2();
        let approx = taylor_phi(c(phi), at).constant;
        assert!(approx <= exact + 1e-12 * exact.abs().max(1.0), "phi={phi} at={at}");
        let tight = taylor_phi(c(at), at).constant;
        assert!((tight + (1.0 + at).log2()).abs() <= 1e-12 * (1.0 + at).log2().max(1.0));
    }
}

#[test]
pub fn theta_tangent_underestimates() {
    let mut r = rng(4);
    for _ in 0..CASES {
        let coeff = log_uniform(&mut r, 1e-2, 1e4);
        let (tau0, a0) = (log_uniform(&mut r, 0.1, 1e3), 1.0 + log_uniform(&mut r, 1e-4, 1e3));
        let (tau, a) = (log_uniform(&mut r, 0.1, 1e3), 1.0 + log_uniform(&mut r, 1e-4, 1e3));
        let exact = coeff / (tau * (a - 1.0));
        let approx = taylor_theta(c(tau), c(a), tau0, a0, coeff).constant;
        assert!(approx <= exact * (1.0 + 1e-12) + 1e-12, "tau={tau} a={a} at ({tau0}, {a0})");
        let tight = taylor_theta(c(tau0), c(a0), tau0, a0, coeff).constant;
        let want = coeff / (tau0 * (a0 - 1.0));
        assert!((tight - want).abs() <= 1e-10 * want);
    }
}

#[test]
pub fn squared_distance_tangent_underestimates() {
    let mut r = rng(5);
    for _ in 0..CASES {
        let center = point(&mut r, 5.0);
        let at = point(&mut r, 5.0);
        let q = point(&mut r, 5.0);
        let h2 = log_uniform(&mut r, 0.1, 10.0);
        let cap = r.gen_range(0.0..30.0);
        let exact = geom::dist2(q, center);
        let approx = linearized_sq_distance(&[c(q[0]), c(q[1])], at, center).constant;
        assert!(approx <= exact + 1e-10, "q={q:?} at={at:?}");
        let tight = linearized_sq_distance(&[c(at[0]), c(at[1])], at, center).constant;
        assert!((tight - geom::dist2(at, center)).abs() <= 1e-10);
        // the clearance is the same tangent shifted by H^2 - cap
        let cl = linearized_clearance(&[c(q[0]), c(q[1])], c(cap), center, at, h2).constant;
        assert!((cl - (approx + h2 - cap)).abs() <= 1e-10);
    }
}

#[test]
pub fn disk_projection_matches_grid() {
    let mut r = rng(6);
    let beta0 = 0.1;
    for _ in 0..CASES {
        let q = point(&mut r, 300.0);
        let center = point(&mut r, 300.0);
        let radius = r.gen_range(0.0..80.0);
        let h = r.gen_range(50.0..150.0);
        let node = UncertainNode {
            center_xy: center,
            bounded_radius_m: Some(radius),
            gaussian_std_m: None,
        };
        let closed = channel::worst_case_eve_gain(q, &node, h, beta0);
        let grid = grid_max_gain(q, &node, h, beta0);
        assert!((closed - grid).abs() <= 1e-6 * closed, "q={q:?} c={center:?} r={radius}");

        // no sampled disk point beats the closed form, and its maximizer lies in the disk
        let far = channel::nearest_disk_point(q, center, radius);
        assert!(geom::dist(far, center) <= radius * (1.0 + 1e-12) + 1e-12);
        for _ in 0..8 {
            let rho = radius * r.gen::<f64>().sqrt();
            let ang = r.gen_range(0.0..std::f64::consts::TAU);
            let e = [center[0] + rho * ang.cos(), center[1] + rho * ang.sin()];
            assert!(channel::gain(q, e, h, beta0) <= closed * (1.0 + 1e-12));
        }
    }
}

#[test]
pub fn s_procedure_lmi_matches_disk_clearance() {
    let mut r = rng(7);
    let (mut feasible, mut infeasible) = (0, 0);
    for _ in 0..CASES {
        // unit-altitude coordinates, as inside the subproblems
        let q = point(&mut r, 4.0);
        let center = point(&mut r, 4.0);
        let radius = log_uniform(&mut r, 1e-3, 1.5);
        let d = geom::dist(q, center);
        let worst = (d - radius).max(0.0).powi(2) + 1.0;
        let cap = worst * log_uniform(&mut r, 0.8, 1.25);

        let block = |m: f64| {
            let lmi = s_procedure_lmi(&[c(q[0]), c(q[1])], c(cap), c(m), center, radius, q, 1.0).unwrap();
            nalgebra::Matrix3::from_fn(|i, j| lmi[i][j].eval(&[])).symmetric_eigenvalues().min()
        };
        // best multiplier for the Schur complement, and a scan around it
        let m_star = (d / radius - 1.0).max(0.0);
        let best = [m_star, m_star * 0.5, m_star * 2.0, 0.0, 1.0, 10.0]
            .iter()
            .map(|m| block(*m))
            .fold(f64::NEG_INFINITY, f64::max);
        let scale = 1.0 + m_star + worst;
        if cap <= worst * (1.0 - 1e-8) {
            feasible += 1;
            assert!(block(m_star) >= -1e-9 * scale, "q={q:?} c={center:?} r={radius} cap={cap}");
        } else if cap >= worst * (1.0 + 1e-8) {
            infeasible += 1;
            assert!(best < 0.0, "q={q:?} c={center:?} r={radius} cap={cap}: LMI feasible");
        }
    }
    assert!(feasible > 1000 && infeasible > 1000);
}

#[test]
pub fn bernstein_bound_is_safe_under_sampling() {
    let mut r = rng(8);
    let draws = 1_000;
    let mut pooled_hits = 0usize;
    let mut pooled_level = 0.0;
    for case in 0..CASES {
        let q = point(&mut r, 3.0);
        let center = point(&mut r, 3.0);
        let std = log_uniform(&mut r, 1e-3, 0.5);
        let level = r.gen_range(0.02..0.5);
        let h2 = 1.0;
        let safe = safe_clearance(q, center, std, h2, level);

        // the emitted constraint set accepts exactly this bound at a fixed waypoint
        let mut p = ConicProgram::new();
        let tau = p.add_var("tau", Some(1e-6), None);
        let y = p.add_var("y", Some(1e-6), None);
        let qe = [c(q[0]), c(q[1])];
        let b = add_bernstein(&mut p, &qe, q, center, std, h2, AffineExpr::var(tau), AffineExpr::var(y), 1.0, level, "b")
            .unwrap();
        if safe > 0.0 {
            let mut x = vec![0.0; p.num_vars()];
            x[tau.0] = 1.0;
            x[y.0] = 1.0 / safe;
            x[b.cap.0] = safe;
            let (u, v) = inverse_product_witness(1.0, 1.0 / safe, safe, 1.0);
            x[b.cap.0 + 1] = u;
            x[b.cap.0 + 2] = v;
            x[b.eta.unwrap().0] = eta_floor(q, center, std);
            x[b.zeta.unwrap().0] = 0.0;
            assert!(p.max_violation(&x) <= 1e-9, "case {case}: {}", p.max_violation(&x));
            x[b.cap.0] = safe * (1.0 + 1e-6) + 1e-9;
            let (u, v) = inverse_product_witness(1.0, 1.0 / safe, x[b.cap.0], 1.0);
            x[b.cap.0 + 1] = u;
            x[b.cap.0 + 2] = v;
            assert!(p.max_violation(&x) > 0.0, "case {case}: cap above the safe bound accepted");
        }

        // Monte-Carlo: the clearance falls below the bound at most `level` of the time
        let mut hits = 0usize;
        for _ in 0..draws {
            let dx: f64 = StandardNormal.sample(&mut r);
            let dy: f64 = StandardNormal.sample(&mut r);
            let e = [center[0] + std * dx, center[1] + std * dy];
            if geom::dist2(q, e) + h2 < safe {
                hits += 1;
            }
        }
        let freq = hits as f64 / draws as f64;
        let margin = 4.0 * (level * (1.0 - level) / draws as f64).sqrt();
        assert!(freq <= level + margin, "case {case}: empirical {freq} > level {level}");
        pooled_hits += hits;
        pooled_level += level * draws as f64;
    }
    assert!((pooled_hits as f64) < pooled_level);
}
