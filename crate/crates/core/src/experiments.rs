//! Scheme dispatch, parameter sweeps, and the three-case convergence
//! comparison, plus the CSV/JSON writers the CLI uses.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{baselines, ocr, wcr};
use crate::sca::{ScaError, ScaOptions, Solution, SolveTrace, TrajectoryMode};
use crate::scenario::{Scenario, ScenarioError, UncertaintyModel};
use crate::units;
use crate::validation::{self, TraceAudit, ValidationError, ValidationReport};

/// Formats `x` with 9 significant digits, dropping trailing zeros.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..9).contains(&exp) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Wcr,
    Ocr,
    NonRobust,
    /// Robust power only, bounded model, fly-hover-fly path.
    Fixed1,
    /// Robust power only, probabilistic model, fly-hover-fly path.
    Fixed2,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Wcr, Scheme::Ocr, Scheme::NonRobust, Scheme::Fixed1, Scheme::Fixed2];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Wcr => "wcr",
            Scheme::Ocr => "ocr",
            Scheme::NonRobust => "nonrobust",
            Scheme::Fixed1 => "fixed1",
            Scheme::Fixed2 => "fixed2",
        }
    }

    /// Location model the scheme designs against and is certified under.
    pub fn model(self) -> UncertaintyModel {
        match self {
            Scheme::Wcr | Scheme::NonRobust | Scheme::Fixed1 => UncertaintyModel::Bounded,
            Scheme::Ocr | Scheme::Fixed2 => UncertaintyModel::Probabilistic,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected wcr, ocr, nonrobust, fixed1, fixed2)"))
    }
}

pub fn run_scheme(s: &Scenario, scheme: Scheme, opts: &ScaOptions) -> Result<(Solution, SolveTrace), ScaError> {
    match scheme {
        Scheme::Wcr => baselines::worst_case_robust(s, opts),
        Scheme::Ocr => baselines::outage_robust(s, opts),
        Scheme::NonRobust => baselines::non_robust(s, opts),
        Scheme::Fixed1 => baselines::fixed_trajectory(s, UncertaintyModel::Bounded, opts),
        Scheme::Fixed2 => baselines::fixed_trajectory(s, UncertaintyModel::Probabilistic, opts),
    }
}

/// [`run_scheme`] started from a previous design of the same scheme instead
/// of the standard starting point. `prev` must be feasible for `s`.
pub fn run_scheme_from(
    s: &Scenario,
    scheme: Scheme,
    prev: &Solution,
    opts: &ScaOptions,
) -> Result<(Solution, SolveTrace), ScaError> {
    let model = scheme.model();
    match scheme {
        Scheme::NonRobust => baselines::non_robust_from(s, Some(prev), opts),
        Scheme::Wcr | Scheme::Fixed1 => {
            let mode = if scheme == Scheme::Wcr { TrajectoryMode::Joint } else { TrajectoryMode::Fixed };
            wcr::run_algorithm1_with(s, baselines::warm_start(s, model, prev)?, mode, opts)
        }
        Scheme::Ocr | Scheme::Fixed2 => {
            let mode = if scheme == Scheme::Ocr { TrajectoryMode::Joint } else { TrajectoryMode::Fixed };
            ocr::run_algorithm2_with(s, baselines::warm_start(s, model, prev)?, mode, opts)
        }
    }
}

/// Swept parameter. Values are in seconds, dBW, and watts respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Vary {
    #[serde(rename = "T")]
    FlightTime,
    #[serde(rename = "p_avg")]
    PAvg,
    #[serde(rename = "it_threshold")]
    ItThreshold,
}

impl Vary {
    pub fn as_str(self) -> &'static str {
        match self {
            Vary::FlightTime => "T",
            Vary::PAvg => "p_avg",
            Vary::ItThreshold => "it_threshold",
        }
    }

    /// Whether raising the value only enlarges the feasible set, so a design
    /// at a lower value is a valid start at a higher one.
    pub fn nested(self) -> bool {
        matches!(self, Vary::PAvg | Vary::ItThreshold)
    }

    /// Scenario at one sweep value.
    pub fn apply(self, base: &Scenario, x: f64) -> Result<Scenario, ScenarioError> {
        let s = base.clone();
        match self {
            Vary::FlightTime => s.with_flight_time(x),
            Vary::PAvg => s.with_p_avg(units::dbw_to_w(x)),
            Vary::ItThreshold => s.with_it_threshold(x),
        }
    }
}

impl FromStr for Vary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T" => Ok(Vary::FlightTime),
            "p_avg" => Ok(Vary::PAvg),
            "it_threshold" => Ok(Vary::ItThreshold),
            _ => Err(format!("unknown sweep parameter `{s}` (expected T, p_avg, it_threshold)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x_value: f64,
    /// NaN when the point failed; see `error`.
    pub avg_secrecy_rate: f64,
    /// Total backend time over all rounds.
    pub wall_ms: f64,
    pub iterations: usize,
    pub error: Option<String>,
}

pub const SWEEP_CSV_HEADER: &str = "x_value,avg_secrecy_rate,wall_ms,iterations";

fn point_from(x: f64, r: Result<(Solution, SolveTrace), String>) -> SweepPoint {
    match r {
        Ok((sol, trace)) => SweepPoint {
            x_value: x,
            avg_secrecy_rate: sol.objective_bps_hz,
            wall_ms: trace.rows.iter().map(|r| r.wall_ms).sum(),
            iterations: trace.iterations(),
            error: None,
        },
        Err(e) => SweepPoint { x_value: x, avg_secrecy_rate: f64::NAN, wall_ms: 0.0, iterations: 0, error: Some(e) },
    }
}

/// Solves every (scheme, value) pair, one scheme per worker.
///
/// Every point is solved from the standard start. For [`Vary::nested`]
/// parameters each scheme walks its values in ascending order and also
/// restarts from the design kept at the previous value, keeping whichever
/// design scores higher; a larger feasible set then never reports a worse
/// local optimum. `on_point` is called as points finish (from worker
/// threads); results do not depend on scheduling.
pub fn sweep<F>(
    base: &Scenario,
    vary: Vary,
    values: &[f64],
    schemes: &[Scheme],
    opts: &ScaOptions,
    on_point: F,
) -> BTreeMap<Scheme, Vec<SweepPoint>>
where
    F: Fn(Scheme, usize, &SweepPoint) + Sync,
{
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    schemes
        .par_iter()
        .map(|&scheme| {
            let mut points: Vec<Option<SweepPoint>> = vec![None; values.len()];
            let mut prev: Option<Solution> = None;
            for &i in &order {
                let x = values[i];
                let r = vary.apply(base, x).map_err(|e| e.to_string()).and_then(|s| {
                    let cold = run_scheme(&s, scheme, opts).map_err(|e| e.to_string());
                    let Some(p) = prev.as_ref().filter(|_| vary.nested()) else {
                        return cold;
                    };
                    match (cold, run_scheme_from(&s, scheme, p, opts)) {
                        (Ok(c), Ok(w)) => Ok(if w.0.objective_bps_hz > c.0.objective_bps_hz { w } else { c }),
                        (Err(_), Ok(w)) => Ok(w),
                        (cold, Err(_)) => cold,
                    }
                });
                if let Ok((sol, _)) = &r {
                    prev = Some(sol.clone());
                }
                let p = point_from(x, r);
                on_point(scheme, i, &p);
                points[i] = Some(p);
            }
            (scheme, points.into_iter().flatten().collect())
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint], timing: bool) -> String {
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            sig9(p.x_value),
            sig9(p.avg_secrecy_rate),
            sig9(if timing { p.wall_ms } else { 0.0 }),
            p.iterations
        ));
    }
    out
}

/// The three `(P_avg dBW, Γ W)` convergence cases.
pub const COMPARE_CASES: [(f64, f64); 3] = [(-10.0, 2.5e-7), (-20.0, 3e-8), (-20.0, 2.5e-7)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRun {
    /// 1-based case number.
    pub case: usize,
    pub scheme: Scheme,
    pub p_avg_dbw: f64,
    pub it_threshold_w: f64,
    pub trace: Option<SolveTrace>,
    pub objective_bps_hz: f64,
    pub error: Option<String>,
}

pub const COMPARE_CSV_HEADER: &str = "case,scheme,iteration,objective,solver_status,wall_ms";

/// Runs both robust designs on the three cases derived from `base`.
pub fn compare(base: &Scenario, opts: &ScaOptions) -> Vec<CompareRun> {
    let jobs: Vec<(usize, Scheme)> = (0..COMPARE_CASES.len())
        .flat_map(|c| [Scheme::Wcr, Scheme::Ocr].map(|s| (c, s)))
        .collect();
    jobs.par_iter()
        .map(|&(c, scheme)| {
            let (dbw, gamma) = COMPARE_CASES[c];
            let r = base
                .clone()
                .with_p_avg(units::dbw_to_w(dbw))
                .and_then(|s| s.with_it_threshold(gamma))
                .map_err(|e| e.to_string())
                .and_then(|s| run_scheme(&s, scheme, opts).map_err(|e| e.to_string()));
            let (trace, objective, error) = match r {
                Ok((sol, trace)) => (Some(trace), sol.objective_bps_hz, None),
                Err(e) => (None, f64::NAN, Some(e)),
            };
            CompareRun {
                case: c + 1,
                scheme,
                p_avg_dbw: dbw,
                it_threshold_w: gamma,
                trace,
                objective_bps_hz: objective,
                error,
            }
        })
        .collect()
}

/// Long-format convergence table: one row per (case, scheme, round).
pub fn compare_csv(runs: &[CompareRun], timing: bool) -> String {
    let mut out = format!("{COMPARE_CSV_HEADER}\n");
    for r in runs {
        let Some(trace) = &r.trace else { continue };
        for row in &trace.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.case,
                r.scheme,
                row.iteration,
                sig9(row.objective),
                row.solver_status,
                sig9(if timing { row.wall_ms } else { 0.0 })
            ));
        }
    }
    out
}

pub const TRACE_CSV_HEADER: &str = "iteration,objective,solver_status,wall_ms";

pub fn trace_csv(trace: &SolveTrace, timing: bool) -> String {
    let mut out = format!("{TRACE_CSV_HEADER}\n");
    for row in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.iteration,
            sig9(row.objective),
            row.solver_status,
            sig9(if timing { row.wall_ms } else { 0.0 })
        ));
    }
    out
}

pub const TRAJECTORY_CSV_HEADER: &str = "slot,x_m,y_m,power_w";

pub fn trajectory_csv(sol: &Solution) -> String {
    let mut out = format!("{TRAJECTORY_CSV_HEADER}\n");
    for (n, (q, p)) in sol.waypoints.iter().zip(&sol.powers).enumerate() {
        out.push_str(&format!("{n},{},{},{}\n", sig9(q[0]), sig9(q[1]), sig9(*p)));
    }
    out
}

/// Oracle verdict on one scheme's design.
///
/// `gate` is the certificate for the model the scheme optimizes against
/// (the nominal, zero-radius model for `nonrobust`); `info` holds extra
/// certificates that do not affect `passed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub scheme: Scheme,
    pub passed: bool,
    pub trace_audit: TraceAudit,
    pub gate: ValidationReport,
    pub info: Vec<ValidationReport>,
}

/// Certifies `sol` with the oracle matching `scheme` and audits its trace.
/// `samples` and `seed` drive the Monte-Carlo outage check.
pub fn certify(
    s: &Scenario,
    scheme: Scheme,
    sol: &Solution,
    trace: &SolveTrace,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<Certification, ValidationError> {
    let (gate, info) = match scheme {
        Scheme::Wcr | Scheme::Fixed1 => (validation::certify_worst_case(sol, s)?, Vec::new()),
        Scheme::Ocr | Scheme::Fixed2 => (validation::certify_outage(sol, s, samples, seed)?, Vec::new()),
        Scheme::NonRobust => {
            let nominal = s.clone().with_radii_zeroed();
            let gate = validation::certify_worst_case(sol, &nominal)?;
            let info = if s.require_model(UncertaintyModel::Bounded).is_ok() {
                vec![validation::certify_worst_case(sol, s)?]
            } else {
                Vec::new()
            };
            (gate, info)
        }
    };
    let trace_audit = validation::audit_trace(trace, epsilon);
    Ok(Certification {
        scheme,
        passed: gate.passed && trace_audit.passed,
        trace_audit,
        gate,
        info,
    })
}

/// Pretty JSON with a trailing newline. Non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

/// Last-two-points saturation test: the final step is below `frac` of the
/// covered range.
pub fn saturates(y: &[f64], frac: f64) -> bool {
    let n = y.len();
    if n < 2 {
        return true;
    }
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (y[n - 1] - y[n - 2]).abs() < frac * (hi - lo).max(f64::MIN_POSITIVE)
}

/// Non-decreasing up to `tol`.
pub fn non_decreasing(y: &[f64], tol: f64) -> bool {
    y.windows(2).all(|w| w[1] >= w[0] - tol)
}
