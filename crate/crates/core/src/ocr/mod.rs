//! Outage-constrained robust design over Gaussian location errors.
//!
//! Eve rate and PU interference constraints must hold with probability at
//! least `1 - rho_bar` and `1 - phi` per slot. Each chance constraint is
//! replaced by its Bernstein-type safe approximation, a single
//! seven-dimensional second-order cone plus one affine inequality.

pub mod bernstein;
pub mod outage;

use std::collections::BTreeMap;

use crate::channel;
use crate::conic::{AffineExpr, ConicProgram};
use crate::geom::Point;
use crate::sca::{self, Assembled, CommonBlock, Design, ScaError, ScaOptions, SlackGroup, Solution, SolveTrace, TrajectoryMode, WcrIterate};
use crate::scenario::{Scenario, UncertaintyModel};

pub use bernstein::{bernstein_eve, bernstein_interference, BernsteinTriple};
pub use outage::{decouple_outage, matched_radius};

pub(crate) struct Outage {
    pub mode: TrajectoryMode,
}

impl Design for Outage {
    fn model(&self) -> UncertaintyModel {
        UncertaintyModel::Probabilistic
    }

    fn assemble(&self, s: &Scenario, it: &WcrIterate) -> Result<Assembled, ScaError> {
        let mut program = ConicProgram::new();
        let common = CommonBlock::build(&mut program, s, it, self.mode)?;
        let u = common.units;
        let n_slots = s.n_slots;
        let rho_bar = s.rho_bar();
        let mut groups = Vec::new();
        let scaled = |std: Option<f64>| std.unwrap_or(0.0) / u.h;

        for (k, eve) in s.eves.iter().enumerate() {
            let coeff = u.snr_coeff(s, s.noise_eve_w[k]);
            let (mut cap, mut upsilon, mut varsigma) = (Vec::new(), Vec::new(), Vec::new());
            for n in 0..n_slots {
                let b = bernstein::add_bernstein(
                    &mut program,
                    &common.q[n],
                    u.len(it.q_tilde[n]),
                    u.len(eve.center_xy),
                    scaled(eve.std()),
                    1.0,
                    AffineExpr::var(common.tau[n]),
                    AffineExpr::var(common.varphi[n]),
                    coeff,
                    rho_bar,
                    &format!("eve[{k}][{n}]"),
                )?;
                cap.push(Some(b.cap));
                upsilon.push(b.eta);
                varsigma.push(b.zeta);
            }
            groups.push(SlackGroup { name: format!("eve_cap[{k}]"), vars: cap, scale: u.h2() });
            groups.push(SlackGroup { name: format!("upsilon[{k}]"), vars: upsilon, scale: u.h2() });
            groups.push(SlackGroup { name: format!("varsigma[{k}]"), vars: varsigma, scale: u.h2() });
        }

        let c_pu = u.it_coeff(s);
        for (l, pu) in s.pus.iter().enumerate() {
            let (mut cap, mut eta, mut zeta) = (Vec::new(), Vec::new(), Vec::new());
            for n in 0..n_slots {
                let b = bernstein::add_bernstein(
                    &mut program,
                    &common.q[n],
                    u.len(it.q_tilde[n]),
                    u.len(pu.center_xy),
                    scaled(pu.std()),
                    1.0,
                    AffineExpr::var(common.tau[n]),
                    AffineExpr::var(common.gamma[l][n]),
                    c_pu,
                    s.phi,
                    &format!("pu[{l}][{n}]"),
                )?;
                cap.push(Some(b.cap));
                eta.push(b.eta);
                zeta.push(b.zeta);
            }
            groups.push(SlackGroup { name: format!("pu_cap[{l}]"), vars: cap, scale: u.h2() });
            groups.push(SlackGroup { name: format!("eta[{l}]"), vars: eta, scale: u.h2() });
            groups.push(SlackGroup { name: format!("zeta[{l}]"), vars: zeta, scale: u.h2() });
        }

        Ok(Assembled { program, common, groups })
    }

    /// `(1/N) sum_n [R_U - beta_n]^+`: the SU rate is recomputed from the
    /// trajectory and powers; `beta_n` is the rate the Eves stay below with
    /// the required probability.
    fn report(&self, s: &Scenario, waypoints: &[Point], powers: &[f64], slacks: &BTreeMap<String, Vec<f64>>) -> f64 {
        let beta = &slacks["beta"];
        secrecy_rate_against_caps(s, waypoints, powers, beta)
    }
}

/// `(1/N) sum_n [R_U[n] - beta[n]]^+`.
pub fn secrecy_rate_against_caps(s: &Scenario, waypoints: &[Point], powers: &[f64], beta: &[f64]) -> f64 {
    let n = waypoints.len().max(1) as f64;
    waypoints
        .iter()
        .zip(powers)
        .zip(beta)
        .map(|((q, p), b)| {
            let g = channel::gain(*q, s.su_xy, s.altitude_m, s.beta0);
            (channel::rate_su(*p, g, s.noise_su_w) - b).max(0.0)
        })
        .sum::<f64>()
        / n
}

/// The convex subproblem solved in each round of the outage-constrained design.
pub fn build_ocr_subproblem(scenario: &Scenario, iterate: &WcrIterate) -> Result<ConicProgram, ScaError> {
    scenario.validate()?;
    scenario.require_model(UncertaintyModel::Probabilistic)?;
    Ok(Outage { mode: TrajectoryMode::Joint }.assemble(scenario, iterate)?.program)
}

/// Same as [`build_ocr_subproblem`] with the waypoints pinned to the iterate's.
pub fn build_ocr_subproblem_fixed(scenario: &Scenario, iterate: &WcrIterate) -> Result<ConicProgram, ScaError> {
    scenario.validate()?;
    scenario.require_model(UncertaintyModel::Probabilistic)?;
    Ok(Outage { mode: TrajectoryMode::Fixed }.assemble(scenario, iterate)?.program)
}

/// Outage-constrained trajectory and power design by successive convex
/// approximation, starting from a feasible `init`.
pub fn run_algorithm2(
    scenario: &Scenario,
    init: WcrIterate,
    epsilon: f64,
    max_iters: usize,
) -> Result<(Solution, SolveTrace), ScaError> {
    let opts = ScaOptions { epsilon, max_iters, ..ScaOptions::default() };
    run_algorithm2_with(scenario, init, TrajectoryMode::Joint, &opts)
}

pub fn run_algorithm2_with(
    scenario: &Scenario,
    init: WcrIterate,
    mode: TrajectoryMode,
    opts: &ScaOptions,
) -> Result<(Solution, SolveTrace), ScaError> {
    sca::run_sca(scenario, init, &Outage { mode }, opts)
}
