//! The successive convex approximation loop shared by both robust designs,
//! and the part of each subproblem that does not depend on the location
//! error model.
//!
//! Subproblems are assembled in normalized units so that the conic backend
//! sees well-scaled data:
//!
//! * lengths are divided by the altitude `H` (so `H` becomes 1),
//! * `tau` is multiplied by `P_avg` (so the power budget reads `mean(1/tau) <= 1`),
//! * interference slacks are divided by `Γ` (so the IT budget reads `mean(gamma) <= 1`),
//! * squared-distance slacks are divided by `H^2`.
//!
//! Multipliers of the S-procedure are unchanged by this scaling.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{
    add_inverse_product_bound, add_reciprocal_sum_bound, AffineExpr, ClarabelBackend, ConicBackend,
    ConicError, ConicProgram, ConicSolution, SolverSettings, StatusKind, VarId, DELTA, TOL_FEAS, TOL_GAP,
};
use crate::geom::{self, Point};
use crate::scenario::{Scenario, ScenarioError, UncertaintyModel};
use crate::wcr::surrogate::{taylor_phi, taylor_theta};

/// Expansion point of one SCA round, in physical units (`tau = 1/P` in 1/W).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WcrIterate {
    pub tau_tilde: Vec<f64>,
    pub q_tilde: Vec<Point>,
    pub alpha_tilde: Vec<f64>,
    pub varphi_tilde: Vec<f64>,
}

impl WcrIterate {
    pub fn n_slots(&self) -> usize {
        self.tau_tilde.len()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.tau_tilde.iter().map(|t| 1.0 / t).collect()
    }

    /// `(1/N) sum_n log2(alpha_n) - log2(1 + varphi_n)`, the value the SCA
    /// rounds improve monotonically.
    pub fn objective(&self) -> f64 {
        let n = self.n_slots().max(1) as f64;
        self.alpha_tilde
            .iter()
            .zip(&self.varphi_tilde)
            .map(|(a, p)| a.log2() - p.ln_1p() / std::f64::consts::LN_2)
            .sum::<f64>()
            / n
    }

    pub(crate) fn check(&self, scenario: &Scenario) -> Result<(), ScaError> {
        let n = scenario.n_slots;
        let lens = [
            self.tau_tilde.len(),
            self.q_tilde.len(),
            self.alpha_tilde.len(),
            self.varphi_tilde.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(ScaError::BadIterate(format!("expected {n} slots, got lengths {lens:?}")));
        }
        let ok = self.tau_tilde.iter().all(|t| t.is_finite() && *t > 0.0)
            && self.alpha_tilde.iter().all(|a| a.is_finite() && *a > 1.0)
            && self.varphi_tilde.iter().all(|p| p.is_finite() && *p > 0.0)
            && self.q_tilde.iter().flatten().all(|x| x.is_finite());
        if !ok {
            return Err(ScaError::BadIterate(
                "expansion point needs tau > 0, alpha > 1, varphi > 0, finite waypoints".into(),
            ));
        }
        Ok(())
    }
}

/// Whether the waypoints are optimized or pinned to the expansion point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMode {
    Joint,
    Fixed,
}

#[derive(Debug, Clone)]
pub struct ScaOptions {
    /// Stop when the objective changes by at most this much (bits/s/Hz).
    pub epsilon: f64,
    pub max_iters: usize,
    pub settings: SolverSettings,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_iters: 300,
            settings: SolverSettings::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScaError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("invalid expansion point: {0}")]
    BadIterate(String),
    #[error("no feasible starting point: {0}")]
    InfeasibleScenario(String),
    #[error("subproblem infeasible at iteration {iteration}: {diagnostics}")]
    InfeasibleSubproblem { iteration: usize, diagnostics: String },
    #[error("solver reported {status} at iteration {iteration}: {diagnostics}")]
    SolverFailure {
        iteration: usize,
        status: StatusKind,
        diagnostics: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub solver_status: String,
    pub wall_ms: f64,
}

/// Per-round record of an SCA run. Row 0 is the starting point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
    pub epsilon: f64,
    /// Stopped by the epsilon rule rather than the iteration cap.
    pub converged: bool,
}

impl SolveTrace {
    pub const CSV_HEADER: &'static str = "iteration,objective,solver_status,wall_ms";

    /// Number of subproblems solved.
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn final_objective(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.objective)
    }

    /// Mean backend wall time per subproblem, in milliseconds.
    pub fn mean_wall_ms(&self) -> f64 {
        let solved: Vec<f64> = self.rows.iter().skip(1).map(|r| r.wall_ms).collect();
        if solved.is_empty() {
            0.0
        } else {
            solved.iter().sum::<f64>() / solved.len() as f64
        }
    }

    /// CSV with [`Self::CSV_HEADER`]. With `timing == false` the wall time
    /// column is written as 0 so that repeated runs are byte-identical.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let ms = if timing { r.wall_ms } else { 0.0 };
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.iteration,
                crate::experiments::sig9(r.objective),
                r.solver_status,
                crate::experiments::sig9(ms)
            ));
        }
        out
    }
}

/// Output of a design: trajectory, powers, and the slacks of the last
/// subproblem in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub waypoints: Vec<Point>,
    pub powers: Vec<f64>,
    /// Average secrecy rate with `[.]^+`, evaluated independently of the
    /// optimizer (worst-case disk positions for the bounded model).
    pub objective_bps_hz: f64,
    /// The optimizer's own value `(1/N) sum log2(alpha) - beta`.
    pub claimed_bps_hz: f64,
    pub slacks: BTreeMap<String, Vec<f64>>,
}

/// Scaling between physical and normalized units for one scenario.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Units {
    pub h: f64,
    pub p_avg: f64,
    pub gamma: f64,
}

impl Units {
    pub fn new(s: &Scenario) -> Self {
        Self {
            h: s.altitude_m,
            p_avg: s.p_avg_w,
            gamma: s.it_threshold_w,
        }
    }

    pub fn h2(&self) -> f64 {
        self.h * self.h
    }

    pub fn len(&self, p: Point) -> Point {
        geom::scale(p, 1.0 / self.h)
    }

    /// `beta0 P_avg / (noise H^2)`: SNR scale of a node `H` metres below at `P_avg`.
    pub fn snr_coeff(&self, s: &Scenario, noise_w: f64) -> f64 {
        s.beta0 * self.p_avg / (noise_w * self.h2())
    }

    /// `beta0 P_avg / (Γ H^2)`.
    pub fn it_coeff(&self, s: &Scenario) -> f64 {
        s.beta0 * self.p_avg / (self.gamma * self.h2())
    }
}

/// Smallest transmit power, as a fraction of `P_avg`, unless the expansion
/// point already sits lower. Slots where any power leaks more to the Eves than it delivers otherwise drive `P -> 0` and the SU
/// rate slack onto its lower bound, where the rate surrogate's gradient
/// explodes and the backend stalls.
pub const POWER_FLOOR: f64 = 1e-3;

/// Variables shared by every subproblem. Waypoints are expressions so that
/// fixed-trajectory schemes can substitute constants.
pub(crate) struct CommonBlock {
    pub units: Units,
    pub tau: Vec<VarId>,
    pub q: Vec<[AffineExpr; 2]>,
    /// Physical waypoints of slots whose position is not a decision variable.
    pub q_pinned: Vec<Option<Point>>,
    pub alpha: Vec<VarId>,
    pub varphi: Vec<VarId>,
    /// `gamma[l][n]`, normalized by `Γ`.
    pub gamma: Vec<Vec<VarId>>,
}

impl CommonBlock {
    /// Adds the objective, the SU rate surrogate, mobility, endpoints, power
    /// budgets, and the IT budget.
    pub fn build(
        program: &mut ConicProgram,
        s: &Scenario,
        it: &WcrIterate,
        mode: TrajectoryMode,
    ) -> Result<Self, ScaError> {
        it.check(s)?;
        let u = Units::new(s);
        let n = s.n_slots;
        let nf = n as f64;

        // never cut off the expansion point itself
        let tau_cap = it.tau_tilde.iter().fold(1.0 / POWER_FLOOR, |m, t| m.max(t * u.p_avg));
        let tau: Vec<VarId> = (0..n)
            .map(|i| program.add_var(format!("tau[{i}]"), Some(u.p_avg / s.p_max_w), Some(tau_cap)))
            .collect();
        let alpha: Vec<VarId> = (0..n)
            .map(|i| program.add_var(format!("alpha[{i}]"), Some(1.0 + DELTA), None))
            .collect();
        let varphi: Vec<VarId> = (0..n).map(|i| program.add_nonneg(format!("varphi[{i}]"))).collect();

        let q_pinned: Vec<Option<Point>> = (0..n)
            .map(|i| match mode {
                _ if i == 0 => Some(s.q_init_xy),
                _ if i == n - 1 => Some(s.q_final_xy),
                TrajectoryMode::Fixed => Some(it.q_tilde[i]),
                TrajectoryMode::Joint => None,
            })
            .collect();
        let q: Vec<[AffineExpr; 2]> = q_pinned
            .iter()
            .enumerate()
            .map(|(i, pinned)| match pinned {
                Some(p) => {
                    let p = u.len(*p);
                    [AffineExpr::constant(p[0]), AffineExpr::constant(p[1])]
                }
                None => [
                    AffineExpr::var(program.add_free(format!("qx[{i}]"))),
                    AffineExpr::var(program.add_free(format!("qy[{i}]"))),
                ],
            })
            .collect();

        // objective: (1/N) sum log2(alpha) + Phi(varphi)
        for i in 0..n {
            program.add_log_term(1.0 / nf, alpha[i])?;
            program.add_objective(taylor_phi(AffineExpr::var(varphi[i]), it.varphi_tilde[i]) * (1.0 / nf));
        }

        // |q - q_s|^2 + 1 <= Theta(tau, alpha)
        let c_su = u.snr_coeff(s, s.noise_su_w);
        let su = u.len(s.su_xy);
        for i in 0..n {
            let theta = taylor_theta(
                AffineExpr::var(tau[i]),
                AffineExpr::var(alpha[i]),
                it.tau_tilde[i] * u.p_avg,
                it.alpha_tilde[i],
                c_su,
            );
            program.add_rotated_soc(
                theta - 1.0,
                AffineExpr::constant(1.0),
                vec![q[i][0].clone() - su[0], q[i][1].clone() - su[1]],
            );
        }

        // mobility
        let step = s.max_step_m() / u.h;
        for i in 0..n.saturating_sub(1) {
            let d = [q[i + 1][0].clone() - q[i][0].clone(), q[i + 1][1].clone() - q[i][1].clone()];
            if d.iter().all(AffineExpr::is_constant) {
                continue;
            }
            program.add_soc(AffineExpr::constant(step), d.to_vec());
        }

        // average and peak power
        let tau_e: Vec<AffineExpr> = tau.iter().map(|t| AffineExpr::var(*t)).collect();
        add_reciprocal_sum_bound(program, &tau_e, 1.0, "power");

        // interference budget per PU
        let gamma: Vec<Vec<VarId>> = (0..s.num_pus())
            .map(|l| (0..n).map(|i| program.add_nonneg(format!("gamma[{l}][{i}]"))).collect())
            .collect();
        for g in &gamma {
            let sum = g.iter().fold(AffineExpr::zero(), |acc, v| acc + AffineExpr::var(*v));
            program.add_le(sum, AffineExpr::constant(nf));
        }

        Ok(Self {
            units: u,
            tau,
            q,
            q_pinned,
            alpha,
            varphi,
            gamma,
        })
    }

    /// Adds `coeff / (tau_n * y) <= cap` and returns the new `cap` variable.
    pub fn inverse_product_cap(
        &self,
        program: &mut ConicProgram,
        n: usize,
        y: VarId,
        coeff: f64,
        tag: String,
    ) -> Result<VarId, ScaError> {
        let cap = program.add_nonneg(tag.clone());
        add_inverse_product_bound(
            program,
            AffineExpr::var(self.tau[n]),
            AffineExpr::var(y),
            AffineExpr::var(cap),
            coeff,
            &tag,
        )?;
        Ok(cap)
    }
}

/// One named group of subproblem variables and its scale to physical units.
pub(crate) struct SlackGroup {
    pub name: String,
    pub vars: Vec<Option<VarId>>,
    pub scale: f64,
}

/// A built subproblem together with the handles needed to read it back.
pub(crate) struct Assembled {
    pub program: ConicProgram,
    pub common: CommonBlock,
    pub groups: Vec<SlackGroup>,
}

impl Assembled {
    pub fn waypoints(&self, x: &[f64]) -> Vec<Point> {
        let h = self.common.units.h;
        self.common
            .q
            .iter()
            .zip(&self.common.q_pinned)
            .map(|(q, pinned)| pinned.unwrap_or_else(|| [q[0].eval(x) * h, q[1].eval(x) * h]))
            .collect()
    }

    /// Expansion point for the next round taken from the solved values.
    pub fn next_iterate(&self, x: &[f64]) -> WcrIterate {
        let c = &self.common;
        WcrIterate {
            tau_tilde: c.tau.iter().map(|v| x[v.0] / c.units.p_avg).collect(),
            q_tilde: self.waypoints(x),
            alpha_tilde: c.alpha.iter().map(|v| x[v.0]).collect(),
            varphi_tilde: c.varphi.iter().map(|v| x[v.0]).collect(),
        }
    }

    pub fn slacks(&self, x: &[f64]) -> BTreeMap<String, Vec<f64>> {
        let c = &self.common;
        let u = &c.units;
        let read = |vars: &[VarId], scale: f64| vars.iter().map(|v| x[v.0] * scale).collect::<Vec<f64>>();
        let mut out = BTreeMap::new();
        out.insert("tau".to_string(), read(&c.tau, 1.0 / u.p_avg));
        out.insert("alpha".to_string(), read(&c.alpha, 1.0));
        let varphi = read(&c.varphi, 1.0);
        out.insert("beta".to_string(), varphi.iter().map(|p| p.ln_1p() / std::f64::consts::LN_2).collect());
        out.insert("varphi".to_string(), varphi);
        for (l, g) in c.gamma.iter().enumerate() {
            out.insert(format!("gamma[{l}]"), read(g, u.gamma));
        }
        for g in &self.groups {
            out.insert(
                g.name.clone(),
                g.vars.iter().map(|v| v.map_or(0.0, |v| x[v.0] * g.scale)).collect(),
            );
        }
        out
    }
}

/// Subproblem assembly for one location error model.
pub(crate) trait Design {
    fn model(&self) -> UncertaintyModel;
    fn assemble(&self, s: &Scenario, it: &WcrIterate) -> Result<Assembled, ScaError>;
    /// Independent evaluation of the achieved secrecy rate.
    fn report(&self, s: &Scenario, waypoints: &[Point], powers: &[f64], slacks: &BTreeMap<String, Vec<f64>>) -> f64;
}

/// Relative decrease of the round objective tolerated as solver noise.
const MONOTONE_SLACK: f64 = 10.0 * TOL_GAP;
/// Trace status of a round whose point was discarded for losing ground.
pub const REJECTED: &str = "rejected";

/// Largest constraint residual accepted from a solve that stopped early
/// (iteration cap or stalled progress).
const ACCEPT_VIOLATION: f64 = 10.0 * TOL_FEAS;

/// Runs SCA rounds from `init` until the objective changes by at most
/// `epsilon` or `max_iters` subproblems have been solved.
pub(crate) fn run_sca(
    s: &Scenario,
    init: WcrIterate,
    design: &dyn Design,
    opts: &ScaOptions,
) -> Result<(Solution, SolveTrace), ScaError> {
    s.validate()?;
    s.require_model(design.model())?;
    init.check(s)?;
    let backend = ClarabelBackend::new(opts.settings.clone());
    let mut trace = SolveTrace {
        rows: vec![TraceRow {
            iteration: 0,
            objective: init.objective(),
            solver_status: "initial".into(),
            wall_ms: 0.0,
        }],
        epsilon: opts.epsilon,
        converged: false,
    };
    let mut iterate = init;
    let mut last: Option<(Assembled, ConicSolution)> = None;

    for iteration in 1..=opts.max_iters.max(1) {
        let assembled = design.assemble(s, &iterate)?;
        let start = Instant::now();
        let sol = backend.solve(&assembled.program)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;

        // Re-tighten the rate slacks at the new (tau, q). This keeps the SU
        // slack off its lower bound, where the surrogate is ill-conditioned,
        // and the new point stays feasible for the next round's surrogates.
        let solved = assembled.next_iterate(&sol.values);
        let next = crate::baselines::tight_iterate(s, design.model(), solved.q_tilde.clone(), solved.tau_tilde.clone())
            .unwrap_or(solved);
        let usable = match sol.status.kind {
            StatusKind::Optimal => true,
            // a solve that stopped early still counts if its point is feasible
            StatusKind::IterationLimit | StatusKind::NumericalFailure => sol.max_violation <= ACCEPT_VIOLATION,
            _ => false,
        };
        if !usable {
            if sol.status.kind == StatusKind::Infeasible {
                return Err(ScaError::InfeasibleSubproblem {
                    iteration,
                    diagnostics: sol.status.diagnostics,
                });
            }
            return Err(ScaError::SolverFailure {
                iteration,
                status: sol.status.kind,
                diagnostics: sol.status.diagnostics,
            });
        }

        let objective = next.objective();
        let previous = trace.final_objective();
        // An inexact solve can land below the current point even though the
        // exact subproblem cannot. Such a step is discarded and the run ends
        // at the current point, which is where an exact solve would stall too.
        if objective < previous - MONOTONE_SLACK * previous.abs().max(1.0) {
            trace.rows.push(TraceRow {
                iteration,
                objective: previous,
                solver_status: REJECTED.into(),
                wall_ms,
            });
            trace.converged = true;
            break;
        }
        trace.rows.push(TraceRow {
            iteration,
            objective,
            solver_status: sol.status.kind.as_str().to_string(),
            wall_ms,
        });
        iterate = next;
        last = Some((assembled, sol));
        if (objective - previous).abs() <= opts.epsilon {
            trace.converged = true;
            break;
        }
    }

    // Without an accepted round the starting point is the answer; it has no
    // auxiliary slacks of its own.
    let (waypoints, mut slacks) = match &last {
        Some((assembled, sol)) => (assembled.waypoints(&sol.values), assembled.slacks(&sol.values)),
        None => (iterate.q_tilde.clone(), BTreeMap::new()),
    };
    let powers: Vec<f64> = iterate.powers();
    // Rate and interference slacks are reported at their tightest values for
    // the returned design rather than as the backend left them.
    let tight = crate::baselines::tight_slacks(s, design.model(), &iterate)?;
    slacks.extend(tight);
    let objective_bps_hz = design.report(s, &waypoints, &powers, &slacks);
    Ok((
        Solution {
            waypoints,
            powers,
            objective_bps_hz,
            claimed_bps_hz: trace.final_objective(),
            slacks,
        },
        trace,
    ))
}
