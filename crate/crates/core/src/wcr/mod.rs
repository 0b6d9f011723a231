//! Worst-case robust design over bounded location errors.
//!
//! Each Eve and PU constraint must hold for every location in a disk around
//! the estimate; the S-procedure turns that infinite family into one 3x3 LMI
//! per node and slot.

pub mod lmi;
pub mod surrogate;

use std::collections::BTreeMap;

use crate::channel;
use crate::conic::{AffineExpr, ConicProgram};
use crate::geom::Point;
use crate::sca::{self, Assembled, CommonBlock, Design, ScaError, ScaOptions, SlackGroup, Solution, SolveTrace, TrajectoryMode};
use crate::scenario::{Scenario, UncertaintyModel};

pub use crate::sca::WcrIterate;
pub use lmi::{linearized_clearance, s_procedure_lmi};
pub use surrogate::{linearized_sq_distance, taylor_phi, taylor_theta};

/// Bounded-error design, with the trajectory optimized or pinned.
pub(crate) struct WorstCase {
    pub mode: TrajectoryMode,
}

impl WorstCase {
    /// Emits `|q - (c + d)|^2 + H^2 >= cap` for all `|d| <= radius`.
    ///
    /// With a free trajectory this is the S-procedure LMI. A zero radius
    /// leaves the nominal constraint, which the LMI only reaches as its
    /// multiplier grows without bound, so the scalar form is emitted
    /// instead. With a pinned trajectory the clearance to the disk is a
    /// number and the constraint is a bound on `cap`. The endpoints of a
    /// free trajectory still get an LMI, so every slot is treated alike.
    #[allow(clippy::too_many_arguments)]
    fn robust_clearance(
        &self,
        program: &mut ConicProgram,
        common: &CommonBlock,
        n: usize,
        cap: crate::conic::VarId,
        center: Point,
        radius: f64,
        q_tilde: Point,
        tag: String,
    ) -> Result<Option<crate::conic::VarId>, ScaError> {
        let u = common.units;
        let q = &common.q[n];
        let c = u.len(center);
        let r = radius / u.h;
        if let (TrajectoryMode::Fixed, Some(p)) = (self.mode, common.q_pinned[n]) {
            let d = channel::disk_clearance(u.len(p), c, r);
            program.bound(cap, None, Some(d * d + 1.0));
            return Ok(None);
        }
        if r == 0.0 {
            program.add_ge(
                lmi::linearized_clearance(q, AffineExpr::var(cap), c, u.len(q_tilde), 1.0),
                AffineExpr::zero(),
            );
            return Ok(None);
        }
        let m = program.add_nonneg(tag);
        let block = lmi::s_procedure_lmi(q, AffineExpr::var(cap), AffineExpr::var(m), c, r, u.len(q_tilde), 1.0)?;
        program.add_psd3(block)?;
        Ok(Some(m))
    }
}

impl Design for WorstCase {
    fn model(&self) -> UncertaintyModel {
        UncertaintyModel::Bounded
    }

    fn assemble(&self, s: &Scenario, it: &WcrIterate) -> Result<Assembled, ScaError> {
        let mut program = ConicProgram::new();
        let common = CommonBlock::build(&mut program, s, it, self.mode)?;
        let u = common.units;
        let n_slots = s.n_slots;
        let mut groups = Vec::new();

        for (k, eve) in s.eves.iter().enumerate() {
            let coeff = u.snr_coeff(s, s.noise_eve_w[k]);
            let radius = eve.radius().unwrap_or(0.0);
            let mut theta = Vec::with_capacity(n_slots);
            let mut lambda = Vec::with_capacity(n_slots);
            for n in 0..n_slots {
                let cap = common.inverse_product_cap(&mut program, n, common.varphi[n], coeff, format!("theta[{k}][{n}]"))?;
                let m = self.robust_clearance(
                    &mut program,
                    &common,
                    n,
                    cap,
                    eve.center_xy,
                    radius,
                    it.q_tilde[n],
                    format!("lambda[{k}][{n}]"),
                )?;
                theta.push(Some(cap));
                lambda.push(m);
            }
            groups.push(SlackGroup { name: format!("theta[{k}]"), vars: theta, scale: u.h2() });
            groups.push(SlackGroup { name: format!("lambda[{k}]"), vars: lambda, scale: 1.0 });
        }

        let c_pu = u.it_coeff(s);
        for (l, pu) in s.pus.iter().enumerate() {
            let radius = pu.radius().unwrap_or(0.0);
            let mut chi = Vec::with_capacity(n_slots);
            let mut mu = Vec::with_capacity(n_slots);
            for n in 0..n_slots {
                let cap = common.inverse_product_cap(&mut program, n, common.gamma[l][n], c_pu, format!("chi[{l}][{n}]"))?;
                let m = self.robust_clearance(
                    &mut program,
                    &common,
                    n,
                    cap,
                    pu.center_xy,
                    radius,
                    it.q_tilde[n],
                    format!("mu[{l}][{n}]"),
                )?;
                chi.push(Some(cap));
                mu.push(m);
            }
            groups.push(SlackGroup { name: format!("chi[{l}]"), vars: chi, scale: u.h2() });
            groups.push(SlackGroup { name: format!("mu[{l}]"), vars: mu, scale: 1.0 });
        }

        Ok(Assembled { program, common, groups })
    }

    fn report(&self, s: &Scenario, waypoints: &[Point], powers: &[f64], _: &BTreeMap<String, Vec<f64>>) -> f64 {
        channel::worst_case_secrecy_rate(waypoints, powers, s)
    }
}

/// The convex subproblem solved in each round of the worst-case design.
pub fn build_wcr_subproblem(scenario: &Scenario, iterate: &WcrIterate) -> Result<ConicProgram, ScaError> {
    scenario.validate()?;
    scenario.require_model(UncertaintyModel::Bounded)?;
    Ok(WorstCase { mode: TrajectoryMode::Joint }.assemble(scenario, iterate)?.program)
}

/// Same as [`build_wcr_subproblem`] with the waypoints pinned to the iterate's.
pub fn build_wcr_subproblem_fixed(scenario: &Scenario, iterate: &WcrIterate) -> Result<ConicProgram, ScaError> {
    scenario.validate()?;
    scenario.require_model(UncertaintyModel::Bounded)?;
    Ok(WorstCase { mode: TrajectoryMode::Fixed }.assemble(scenario, iterate)?.program)
}

/// Worst-case robust trajectory and power design by successive convex
/// approximation, starting from a feasible `init`.
pub fn run_algorithm1(
    scenario: &Scenario,
    init: WcrIterate,
    epsilon: f64,
    max_iters: usize,
) -> Result<(Solution, SolveTrace), ScaError> {
    let opts = ScaOptions { epsilon, max_iters, ..ScaOptions::default() };
    run_algorithm1_with(scenario, init, TrajectoryMode::Joint, &opts)
}

pub fn run_algorithm1_with(
    scenario: &Scenario,
    init: WcrIterate,
    mode: TrajectoryMode,
    opts: &ScaOptions,
) -> Result<(Solution, SolveTrace), ScaError> {
    sca::run_sca(scenario, init, &WorstCase { mode }, opts)
}

/// Nearest point of each Eve's disk to each waypoint.
pub fn adversarial_eves(scenario: &Scenario, waypoints: &[Point]) -> Vec<Vec<Point>> {
    waypoints
        .iter()
        .map(|q| {
            scenario
                .eves
                .iter()
                .map(|e| channel::nearest_disk_point(*q, e.center_xy, e.radius().unwrap_or(0.0)))
                .collect()
        })
        .collect()
}
