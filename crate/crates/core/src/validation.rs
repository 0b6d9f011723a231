//! Oracles that check a design without trusting the optimizer.
//!
//! Everything here is built on the closed forms of [`crate::channel`], disk
//! grids, and Monte-Carlo sampling; nothing touches the conic machinery.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel;
use crate::conic::{TOL_FEAS, TOL_GAP};
use crate::geom::{self, Point};
use crate::sca::{Solution, SolveTrace};
use crate::scenario::{Scenario, UncertainNode};

/// Polar grid resolution per disk (radial x angular).
pub const GRID_RINGS: usize = 32;
pub const GRID_SPOKES: usize = 32;
/// Binomial z-score for flagging an empirical outage.
pub const OUTAGE_Z: f64 = 3.0;
pub const MIN_SAMPLES: usize = 1000;
/// Relative slack on threshold comparisons inside one Monte-Carlo draw.
const SAMPLE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("at least {MIN_SAMPLES} samples are needed, got {0}")]
    TooFewSamples(usize),
    #[error("solution has {got} slots, scenario has {want}")]
    SlotMismatch { got: usize, want: usize },
    #[error("solution lacks slack `{0}`")]
    MissingSlack(String),
}

/// One checked quantity. `violation` is in the unit named by `unit` and is
/// positive only when the limit is exceeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub slot: Option<usize>,
    pub value: f64,
    pub limit: f64,
    pub violation: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `worst_case` or `outage`.
    pub kind: String,
    pub passed: bool,
    pub tolerance: f64,
    pub max_violation: f64,
    /// Average secrecy rate the oracle certifies.
    pub certified_bps_hz: f64,
    pub claimed_bps_hz: f64,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
    /// Names of the checks that failed, with slot indices.
    pub failures: Vec<String>,
}

impl ValidationReport {
    fn finish(kind: &str, tolerance: f64, checks: Vec<Check>, certified: f64, claimed: f64) -> Self {
        let max_violation = checks.iter().map(|c| c.violation).fold(0.0, f64::max);
        let failures: Vec<String> = checks
            .iter()
            .filter(|c| !(c.violation <= tolerance))
            .map(|c| match c.slot {
                Some(n) => format!("{}[{n}]", c.name),
                None => c.name.clone(),
            })
            .collect();
        Self {
            kind: kind.into(),
            passed: failures.is_empty(),
            tolerance,
            max_violation,
            certified_bps_hz: certified,
            claimed_bps_hz: claimed,
            samples: None,
            seed: None,
            checks,
            failures,
        }
    }
}

fn check(name: impl Into<String>, slot: Option<usize>, value: f64, limit: f64, scale: f64, unit: &str) -> Check {
    Check {
        name: name.into(),
        slot,
        value,
        limit,
        violation: ((value - limit) / scale).max(0.0),
        unit: unit.into(),
    }
}

/// Disk sample points: a 32 x 32 polar grid, the center, and the point
/// nearest to `q`.
pub fn disk_grid(center: Point, radius: f64, q: Point) -> Vec<Point> {
    let mut pts = Vec::with_capacity(GRID_RINGS * GRID_SPOKES + 2);
    pts.push(center);
    if radius > 0.0 {
        for i in 1..=GRID_RINGS {
            let r = radius * i as f64 / GRID_RINGS as f64;
            for j in 0..GRID_SPOKES {
                let t = 2.0 * PI * j as f64 / GRID_SPOKES as f64;
                pts.push([center[0] + r * t.cos(), center[1] + r * t.sin()]);
            }
        }
    }
    pts.push(channel::nearest_disk_point(q, center, radius));
    pts
}

/// Largest gain from `q` to any sampled point of the node's disk.
pub fn grid_max_gain(q: Point, node: &UncertainNode, h: f64, beta0: f64) -> f64 {
    disk_grid(node.center_xy, node.radius().unwrap_or(0.0), q)
        .into_iter()
        .map(|e| channel::gain(q, e, h, beta0))
        .fold(0.0, f64::max)
}

/// Checks shared by both certifications: endpoints, mobility, power limits.
fn kinematic_and_power_checks(sol: &Solution, s: &Scenario) -> Vec<Check> {
    let n = s.n_slots;
    let step = s.max_step_m();
    let mut out = vec![
        check("q_init", None, geom::dist(sol.waypoints[0], s.q_init_xy), 0.0, step, "fraction of max step"),
        check("q_final", None, geom::dist(sol.waypoints[n - 1], s.q_final_xy), 0.0, step, "fraction of max step"),
    ];
    for i in 0..n - 1 {
        out.push(check(
            "mobility",
            Some(i),
            geom::dist(sol.waypoints[i], sol.waypoints[i + 1]),
            step,
            step,
            "fraction of max step",
        ));
    }
    for (i, p) in sol.powers.iter().enumerate() {
        out.push(check("peak_power", Some(i), *p, s.p_max_w, s.p_max_w, "fraction of peak power"));
        out.push(check("power_nonnegative", Some(i), -*p, 0.0, s.p_max_w, "fraction of peak power"));
    }
    let avg = sol.powers.iter().sum::<f64>() / n as f64;
    out.push(check("average_power", None, avg, s.p_avg_w, s.p_avg_w, "fraction of average power"));
    out
}

fn validate_shape(sol: &Solution, s: &Scenario) -> Result<(), ValidationError> {
    for got in [sol.waypoints.len(), sol.powers.len()] {
        if got != s.n_slots {
            return Err(ValidationError::SlotMismatch { got, want: s.n_slots });
        }
    }
    Ok(())
}

/// Certifies a design against every location inside the uncertainty disks.
///
/// Eve rates are compared with the claimed per-slot caps `beta` (bits),
/// PU interference with the claimed per-slot `gamma` and the average with
/// `Γ` (both relative to `Γ`). Missing slacks skip the per-slot checks. The
/// certified rate is the average secrecy rate at the grid-worst Eve
/// positions.
pub fn certify_worst_case(sol: &Solution, s: &Scenario) -> Result<ValidationReport, ValidationError> {
    validate_shape(sol, s)?;
    let (h, b0) = (s.altitude_m, s.beta0);
    let mut checks = kinematic_and_power_checks(sol, s);
    let beta = sol.slacks.get("beta");

    let mut certified = 0.0;
    for (n, (q, p)) in sol.waypoints.iter().zip(&sol.powers).enumerate() {
        let ru = channel::rate_su(*p, channel::gain(*q, s.su_xy, h, b0), s.noise_su_w);
        let mut worst_eve: f64 = 0.0;
        for (k, eve) in s.eves.iter().enumerate() {
            worst_eve = worst_eve.max(channel::rate_eve(*p, grid_max_gain(*q, eve, h, b0), s.noise_eve_w[k]));
        }
        certified += (ru - worst_eve).max(0.0);
        if let Some(beta) = beta {
            checks.push(check("eve_rate", Some(n), worst_eve, beta[n], 1.0, "bits/s/Hz"));
        }
    }
    certified /= s.n_slots as f64;

    for (l, pu) in s.pus.iter().enumerate() {
        let gamma = sol.slacks.get(&format!("gamma[{l}]"));
        let mut total = 0.0;
        for (n, (q, p)) in sol.waypoints.iter().zip(&sol.powers).enumerate() {
            let i = p * grid_max_gain(*q, pu, h, b0);
            total += i;
            if let Some(g) = gamma {
                checks.push(check(format!("interference[{l}]"), Some(n), i, g[n], s.it_threshold_w, "fraction of IT threshold"));
            }
        }
        checks.push(check(
            format!("average_interference[{l}]"),
            None,
            total / s.n_slots as f64,
            s.it_threshold_w,
            s.it_threshold_w,
            "fraction of IT threshold",
        ));
    }
    Ok(ValidationReport::finish("worst_case", TOL_FEAS, checks, certified, sol.claimed_bps_hz))
}

/// Binomial upper flag level `p + z sqrt(p (1 - p) / samples)`.
pub fn outage_flag_level(p: f64, samples: usize) -> f64 {
    p + OUTAGE_Z * (p * (1.0 - p) / samples as f64).sqrt()
}

/// Monte-Carlo outage check under Gaussian location errors.
///
/// Per slot, draws `samples` independent realizations of every node and
/// counts how often the largest Eve rate exceeds `beta[n]` (allowed `rho`)
/// and how often each PU's interference exceeds `gamma[l][n]` (allowed
/// `phi`). Slot `n` uses the stream seeded with `seed + n`, so results do
/// not depend on thread scheduling.
pub fn certify_outage(
    sol: &Solution,
    s: &Scenario,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport, ValidationError> {
    if samples < MIN_SAMPLES {
        return Err(ValidationError::TooFewSamples(samples));
    }
    validate_shape(sol, s)?;
    let beta = sol.slacks.get("beta").ok_or_else(|| ValidationError::MissingSlack("beta".into()))?;
    let gamma: Vec<&Vec<f64>> = (0..s.num_pus())
        .map(|l| {
            let key = format!("gamma[{l}]");
            sol.slacks.get(&key).ok_or(ValidationError::MissingSlack(key))
        })
        .collect::<Result<_, _>>()?;
    let (h, b0) = (s.altitude_m, s.beta0);

    // (eve failures, pu failures per l) per slot
    let counts: Vec<(usize, Vec<usize>)> = (0..s.n_slots)
        .into_par_iter()
        .map(|n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(n as u64));
            let q = sol.waypoints[n];
            let p = sol.powers[n];
            let mut eve_fail = 0;
            let mut pu_fail = vec![0; s.num_pus()];
            for _ in 0..samples {
                let mut worst: f64 = f64::NEG_INFINITY;
                for (k, eve) in s.eves.iter().enumerate() {
                    let e = draw(&mut rng, eve);
                    worst = worst.max(channel::rate_eve(p, channel::gain(q, e, h, b0), s.noise_eve_w[k]));
                }
                if worst > beta[n] + SAMPLE_TOL * beta[n].abs().max(1.0) {
                    eve_fail += 1;
                }
                for (l, pu) in s.pus.iter().enumerate() {
                    let loc = draw(&mut rng, pu);
                    let i = p * channel::gain(q, loc, h, b0);
                    if i > gamma[l][n] * (1.0 + SAMPLE_TOL) + SAMPLE_TOL * s.it_threshold_w * 1e-3 {
                        pu_fail[l] += 1;
                    }
                }
            }
            (eve_fail, pu_fail)
        })
        .collect();

    let ns = samples as f64;
    let eve_flag = outage_flag_level(s.rho, samples);
    let pu_flag = outage_flag_level(s.phi, samples);
    let mut checks = Vec::new();
    for (n, (eve_fail, pu_fail)) in counts.iter().enumerate() {
        let f = *eve_fail as f64 / ns;
        checks.push(Check {
            name: "eve_outage".into(),
            slot: Some(n),
            value: f,
            limit: s.rho,
            violation: (f - eve_flag).max(0.0),
            unit: "probability above the 3-sigma flag level".into(),
        });
        for (l, c) in pu_fail.iter().enumerate() {
            let f = *c as f64 / ns;
            checks.push(Check {
                name: format!("pu_outage[{l}]"),
                slot: Some(n),
                value: f,
                limit: s.phi,
                violation: (f - pu_flag).max(0.0),
                unit: "probability above the 3-sigma flag level".into(),
            });
        }
    }
    for (l, g) in gamma.iter().enumerate() {
        let avg = g.iter().sum::<f64>() / s.n_slots as f64;
        checks.push(check(format!("gamma_budget[{l}]"), None, avg, s.it_threshold_w, s.it_threshold_w, "fraction of IT threshold"));
    }
    checks.extend(kinematic_and_power_checks(sol, s));

    let certified = crate::ocr::secrecy_rate_against_caps(s, &sol.waypoints, &sol.powers, beta);
    let mut report = ValidationReport::finish("outage", TOL_FEAS, checks, certified, sol.claimed_bps_hz);
    report.samples = Some(samples);
    report.seed = Some(seed);
    Ok(report)
}

fn draw(rng: &mut ChaCha8Rng, node: &UncertainNode) -> Point {
    let std = node.std().unwrap_or(0.0);
    let dx: f64 = StandardNormal.sample(rng);
    let dy: f64 = StandardNormal.sample(rng);
    [node.center_xy[0] + std * dx, node.center_xy[1] + std * dy]
}

/// Analytic Hessian of `1 / (x y)`:
/// `(1 / (x y)) [[2/x^2, 1/(x y)], [1/(x y), 2/y^2]]`.
pub fn inverse_product_hessian(x: f64, y: f64) -> [[f64; 2]; 2] {
    let f = 1.0 / (x * y);
    [[2.0 * f / (x * x), f * f], [f * f, 2.0 * f / (y * y)]]
}

/// Central finite-difference Hessian of `1 / (x y)`.
pub fn inverse_product_hessian_fd(x: f64, y: f64) -> [[f64; 2]; 2] {
    let f = |a: f64, b: f64| 1.0 / (a * b);
    let (hx, hy) = (1e-3 * x, 1e-3 * y);
    let fxx = (f(x + hx, y) - 2.0 * f(x, y) + f(x - hx, y)) / (hx * hx);
    let fyy = (f(x, y + hy) - 2.0 * f(x, y) + f(x, y - hy)) / (hy * hy);
    let fxy = (f(x + hx, y + hy) - f(x + hx, y - hy) - f(x - hx, y + hy) + f(x - hx, y - hy)) / (4.0 * hx * hy);
    [[fxx, fxy], [fxy, fyy]]
}

/// Smallest eigenvalue of a symmetric 2x2 matrix.
pub fn min_eig_2x2(m: [[f64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = ((m[0][0] - m[1][1]).powi(2) + 4.0 * m[0][1] * m[1][0]).max(0.0).sqrt();
    let _ = det;
    0.5 * (tr - disc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianReport {
    pub passed: bool,
    pub samples: usize,
    pub min_eigenvalue: f64,
    /// Largest relative analytic vs finite-difference entry mismatch.
    pub max_fd_rel_error: f64,
}

/// Samples `x, y` log-uniformly in `[0.1, 10]` and checks that both the
/// analytic and the finite-difference Hessians of `1/(xy)` are PSD.
pub fn check_hessian_psd(samples: usize, seed: u64) -> HessianReport {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_eig = f64::INFINITY;
    let mut max_err: f64 = 0.0;
    for _ in 0..samples {
        let x = 10f64.powf(rng.gen_range(-1.0..1.0));
        let y = 10f64.powf(rng.gen_range(-1.0..1.0));
        let a = inverse_product_hessian(x, y);
        let d = inverse_product_hessian_fd(x, y);
        // eigenvalues relative to the matrix scale
        let scale = a[0][0].abs().max(a[1][1].abs());
        min_eig = min_eig.min(min_eig_2x2(a) / scale).min(min_eig_2x2(d) / scale);
        for i in 0..2 {
            for j in 0..2 {
                max_err = max_err.max((a[i][j] - d[i][j]).abs() / a[i][j].abs());
            }
        }
    }
    HessianReport {
        passed: min_eig >= -1e-8 && max_err <= 1e-5,
        samples,
        min_eigenvalue: min_eig,
        max_fd_rel_error: max_err,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceAudit {
    pub passed: bool,
    pub monotone: bool,
    pub epsilon_rule: bool,
    /// Largest decrease between consecutive rounds (0 if monotone).
    pub max_decrease: f64,
    pub detail: String,
}

/// Checks that objectives never decrease (beyond `10 tol_gap`, relative to
/// the objective size) and that the run stopped exactly when the change
/// first fell to `epsilon` or below.
pub fn audit_trace(trace: &SolveTrace, epsilon: f64) -> TraceAudit {
    let obj: Vec<f64> = trace.rows.iter().map(|r| r.objective).collect();
    let mut max_decrease: f64 = 0.0;
    let mut monotone = obj.iter().all(|v| v.is_finite());
    let mut first_stop = None;
    for (i, w) in obj.windows(2).enumerate() {
        let slack = 10.0 * TOL_GAP * w[0].abs().max(1.0);
        let drop = w[0] - w[1];
        max_decrease = max_decrease.max(drop);
        if drop > slack {
            monotone = false;
        }
        if first_stop.is_none() && (w[1] - w[0]).abs() <= epsilon {
            first_stop = Some(i + 1);
        }
    }
    let last = obj.len().saturating_sub(1);
    let epsilon_rule = match first_stop {
        // stopped at the first round meeting the rule, and flagged it
        Some(i) => i == last && trace.converged,
        // never met: must not claim convergence
        None => !trace.converged,
    };
    let detail = format!(
        "{} rounds, max decrease {max_decrease:.3e}, first round within epsilon {first_stop:?}, converged flag {}",
        last, trace.converged
    );
    TraceAudit {
        passed: monotone && epsilon_rule,
        monotone,
        epsilon_rule,
        max_decrease: max_decrease.max(0.0),
        detail,
    }
}

/// Per-slot worst-case Eve rates and PU interference at the closed-form
/// extreme points, keyed by quantity name.
pub fn worst_case_profile(sol: &Solution, s: &Scenario) -> BTreeMap<String, Vec<f64>> {
    let (h, b0) = (s.altitude_m, s.beta0);
    let mut out = BTreeMap::new();
    for (k, eve) in s.eves.iter().enumerate() {
        out.insert(
            format!("eve_rate[{k}]"),
            sol.waypoints
                .iter()
                .zip(&sol.powers)
                .map(|(q, p)| channel::rate_eve(*p, channel::worst_case_eve_gain(*q, eve, h, b0), s.noise_eve_w[k]))
                .collect(),
        );
    }
    for (l, pu) in s.pus.iter().enumerate() {
        out.insert(
            format!("interference[{l}]"),
            sol.waypoints
                .iter()
                .zip(&sol.powers)
                .map(|(q, p)| channel::worst_case_interference(*q, *p, pu, h, b0))
                .collect(),
        );
    }
    out
}
