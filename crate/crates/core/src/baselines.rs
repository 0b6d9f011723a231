//! Benchmark schemes and the feasible starting point shared by every design.

use std::collections::BTreeMap;

use crate::channel;
use crate::conic::DELTA;
use crate::geom::{self, Point};
use crate::ocr::{self, bernstein};
use crate::sca::{ScaError, ScaOptions, Solution, SolveTrace, TrajectoryMode, WcrIterate};
use crate::scenario::{Scenario, UncertaintyModel};
use crate::wcr;

/// Relative margin kept below the interference budget by the starting powers,
/// so the first subproblem has a strictly feasible power allocation.
const POWER_MARGIN: f64 = 1e-6;

/// Fly to the point above the SU at full speed, hover, then fly to the final
/// point at full speed, arriving in the last slot. Falls back to a straight
/// line at uniform speed when the detour over the SU does not fit.
pub fn fly_hover_fly(s: &Scenario) -> Vec<Point> {
    let n = s.n_slots;
    let step = s.max_step_m();
    let to_su = (geom::dist(s.q_init_xy, s.su_xy) / step).ceil() as usize;
    let from_su = (geom::dist(s.su_xy, s.q_final_xy) / step).ceil() as usize;
    if to_su + from_su > n - 1 {
        let d = geom::sub(s.q_final_xy, s.q_init_xy);
        return (0..n)
            .map(|i| {
                if i == n - 1 {
                    s.q_final_xy
                } else {
                    geom::add(s.q_init_xy, geom::scale(d, i as f64 / (n - 1) as f64))
                }
            })
            .collect();
    }
    let depart = n - 1 - from_su;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                s.q_final_xy
            } else if i <= to_su {
                geom::step_toward(s.q_init_xy, s.su_xy, i as f64 * step)
            } else if i <= depart {
                s.su_xy
            } else {
                geom::step_toward(s.su_xy, s.q_final_xy, (i - depart) as f64 * step)
            }
        })
        .collect()
}

/// Number of hover intervals in [`fly_hover_fly`], or `None` when the
/// straight-line fallback is used.
pub fn hover_intervals(s: &Scenario) -> Option<usize> {
    let step = s.max_step_m();
    let to_su = (geom::dist(s.q_init_xy, s.su_xy) / step).ceil() as usize;
    let from_su = (geom::dist(s.su_xy, s.q_final_xy) / step).ceil() as usize;
    (s.n_slots - 1).checked_sub(to_su + from_su)
}

/// Interference gain `s_l` that the model guarantees at waypoint `q`: the
/// worst case over the disk, or the Bernstein-safe bound.
fn guaranteed_gain(
    s: &Scenario,
    q: Point,
    node: &crate::scenario::UncertainNode,
    model: UncertaintyModel,
    level: f64,
) -> Result<f64, ScaError> {
    match model {
        UncertaintyModel::Bounded => Ok(channel::worst_case_eve_gain(q, node, s.altitude_m, s.beta0)),
        UncertaintyModel::Probabilistic => {
            let h2 = s.altitude_m * s.altitude_m;
            let c = bernstein::safe_clearance(q, node.center_xy, node.std().unwrap_or(0.0), h2, level);
            if c > 0.0 {
                Ok(s.beta0 / c)
            } else {
                Err(ScaError::InfeasibleScenario(format!(
                    "location error around {:?} too large for a Bernstein-safe bound at altitude {}",
                    node.center_xy, s.altitude_m
                )))
            }
        }
    }
}

/// Feasible expansion point: [`fly_hover_fly`] with uniform power, scaled
/// down until every PU's guaranteed average interference is within `Γ`.
///
/// The interference is linear in the common power level, so the scaling is
/// computed in closed form.
pub fn initial_iterate(s: &Scenario, model: UncertaintyModel) -> Result<WcrIterate, ScaError> {
    s.validate()?;
    s.require_model(model)?;
    initial_iterate_on(s, model, fly_hover_fly(s))
}

/// [`initial_iterate`] along a given path.
pub fn initial_iterate_on(s: &Scenario, model: UncertaintyModel, path: Vec<Point>) -> Result<WcrIterate, ScaError> {
    let n = s.n_slots as f64;
    let mut scale: f64 = 1.0;
    for pu in &s.pus {
        let mut avg = 0.0;
        for q in &path {
            avg += guaranteed_gain(s, *q, pu, model, s.phi)? * s.p_avg_w;
        }
        avg /= n;
        scale = scale.min(s.it_threshold_w / avg);
    }
    let p = s.p_avg_w * scale * (1.0 - POWER_MARGIN);
    if !(p > 0.0 && p.is_finite()) {
        return Err(ScaError::InfeasibleScenario("no positive power meets the interference budget".into()));
    }

    let tau = vec![1.0 / p; path.len()];
    tight_iterate(s, model, path, tau)
}

/// Expansion point at a previous design's waypoints and powers, for a
/// scenario whose feasible set contains that design.
pub fn warm_start(s: &Scenario, model: UncertaintyModel, prev: &Solution) -> Result<WcrIterate, ScaError> {
    s.validate()?;
    s.require_model(model)?;
    if prev.waypoints.len() != s.n_slots || prev.powers.iter().any(|p| !(*p > 0.0)) {
        return Err(ScaError::InfeasibleScenario("warm start needs one positive power per slot".into()));
    }
    tight_iterate(s, model, prev.waypoints.clone(), prev.powers.iter().map(|p| 1.0 / p).collect())
}

/// Expansion point at the given waypoints and `tau` with the rate slacks
/// as tight as the model allows: `alpha = 1 + SU SNR` and `varphi` the
/// largest Eve SNR the model guarantees against.
pub(crate) fn tight_iterate(
    s: &Scenario,
    model: UncertaintyModel,
    path: Vec<Point>,
    tau: Vec<f64>,
) -> Result<WcrIterate, ScaError> {
    let rho_bar = s.rho_bar();
    let mut alpha = Vec::with_capacity(path.len());
    let mut varphi = Vec::with_capacity(path.len());
    for (q, t) in path.iter().zip(&tau) {
        let p = 1.0 / t;
        let g = channel::gain(*q, s.su_xy, s.altitude_m, s.beta0);
        alpha.push((1.0 + p * g / s.noise_su_w).max(1.0 + DELTA));
        let mut worst: f64 = 0.0;
        for (k, eve) in s.eves.iter().enumerate() {
            worst = worst.max(p * guaranteed_gain(s, *q, eve, model, rho_bar)? / s.noise_eve_w[k]);
        }
        varphi.push(worst);
    }
    Ok(WcrIterate {
        tau_tilde: tau,
        q_tilde: path,
        alpha_tilde: alpha,
        varphi_tilde: varphi,
    })
}

/// `tau`, `alpha`, `varphi`, `beta`, and `gamma[l]` (watts) of `it` at their
/// tightest values under `model`.
pub(crate) fn tight_slacks(
    s: &Scenario,
    model: UncertaintyModel,
    it: &WcrIterate,
) -> Result<BTreeMap<String, Vec<f64>>, ScaError> {
    let t = tight_iterate(s, model, it.q_tilde.clone(), it.tau_tilde.clone())?;
    let mut out = BTreeMap::new();
    out.insert("beta".to_string(), t.varphi_tilde.iter().map(|p| p.ln_1p() / std::f64::consts::LN_2).collect());
    for (l, pu) in s.pus.iter().enumerate() {
        let g = t
            .q_tilde
            .iter()
            .zip(&t.tau_tilde)
            .map(|(q, tau)| Ok(guaranteed_gain(s, *q, pu, model, s.phi)? / tau))
            .collect::<Result<Vec<f64>, ScaError>>()?;
        out.insert(format!("gamma[{l}]"), g);
    }
    out.insert("tau".to_string(), t.tau_tilde);
    out.insert("alpha".to_string(), t.alpha_tilde);
    out.insert("varphi".to_string(), t.varphi_tilde);
    Ok(out)
}

/// Worst-case robust joint design (Algorithm 1 from the standard start).
pub fn worst_case_robust(s: &Scenario, opts: &ScaOptions) -> Result<(Solution, SolveTrace), ScaError> {
    let init = initial_iterate(s, UncertaintyModel::Bounded)?;
    wcr::run_algorithm1_with(s, init, TrajectoryMode::Joint, opts)
}

/// Outage-constrained robust joint design (Algorithm 2 from the standard start).
pub fn outage_robust(s: &Scenario, opts: &ScaOptions) -> Result<(Solution, SolveTrace), ScaError> {
    let init = initial_iterate(s, UncertaintyModel::Probabilistic)?;
    ocr::run_algorithm2_with(s, init, TrajectoryMode::Joint, opts)
}

/// Joint design that trusts the estimated locations (all radii zero).
///
/// The returned objective is re-evaluated at the worst-case Eve positions of
/// the original scenario; the optimizer's own value stays in
/// `claimed_bps_hz`.
pub fn non_robust(s: &Scenario, opts: &ScaOptions) -> Result<(Solution, SolveTrace), ScaError> {
    non_robust_from(s, None, opts)
}

/// [`non_robust`], optionally warm-started from a previous non-robust design.
pub fn non_robust_from(
    s: &Scenario,
    warm: Option<&Solution>,
    opts: &ScaOptions,
) -> Result<(Solution, SolveTrace), ScaError> {
    let nominal = s.clone().with_radii_zeroed();
    let init = match warm {
        Some(prev) => warm_start(&nominal, UncertaintyModel::Bounded, prev)?,
        None => initial_iterate(&nominal, UncertaintyModel::Bounded)?,
    };
    let (mut sol, trace) = wcr::run_algorithm1_with(&nominal, init, TrajectoryMode::Joint, opts)?;
    sol.objective_bps_hz = if s.require_model(UncertaintyModel::Bounded).is_ok() {
        channel::worst_case_secrecy_rate(&sol.waypoints, &sol.powers, s)
    } else {
        sol.objective_bps_hz
    };
    Ok((sol, trace))
}

/// Power-only robust design along the [`fly_hover_fly`] path: scheme I for
/// the bounded model, scheme II for the probabilistic one.
pub fn fixed_trajectory(
    s: &Scenario,
    model: UncertaintyModel,
    opts: &ScaOptions,
) -> Result<(Solution, SolveTrace), ScaError> {
    let init = initial_iterate(s, model)?;
    match model {
        UncertaintyModel::Bounded => wcr::run_algorithm1_with(s, init, TrajectoryMode::Fixed, opts),
        UncertaintyModel::Probabilistic => ocr::run_algorithm2_with(s, init, TrajectoryMode::Fixed, opts),
    }
}
