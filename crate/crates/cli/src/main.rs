//! `uav-secrecy`: solve, sweep, and compare robust UAV secrecy designs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use uav_secrecy::experiments::{self, Scheme, Vary};
use uav_secrecy::{load_scenario, ScaError, ScaOptions, Scenario};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const EXIT_CERTIFICATION: u8 = 5;

#[derive(Parser)]
#[command(name = "uav-secrecy", version, about = "Robust UAV trajectory and power design for secure cognitive-radio links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scheme, certify the result, and write solution.json,
    /// trajectory.csv, trace.csv and validation.json.
    Solve {
        /// Scenario config (JSON).
        config: PathBuf,
        #[arg(long, default_value = "wcr")]
        model: Scheme,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Monte-Carlo seed for the outage certificate.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Monte-Carlo draws per slot for the outage certificate.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sweep one parameter and write one CSV per scheme.
    Sweep {
        config: PathBuf,
        /// T (seconds), p_avg (dBW) or it_threshold (watts).
        #[arg(long)]
        vary: Vary,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "wcr,ocr")]
        schemes: Vec<Scheme>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run both robust designs on the three convergence cases.
    Compare {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the built-in fixture scenario as a config document.
    Fixture,
}

#[derive(Args)]
struct RunArgs {
    /// Stop when the objective changes by at most this much (bits/s/Hz).
    #[arg(long, default_value_t = ScaOptions::default().epsilon)]
    eps: f64,
    #[arg(long, default_value_t = ScaOptions::default().max_iters)]
    max_iters: usize,
    /// Write 0 in every wall_ms column so outputs are byte-identical across runs.
    #[arg(long)]
    no_timing: bool,
}

impl RunArgs {
    fn options(&self) -> Result<ScaOptions, Failure> {
        if !(self.eps > 0.0 && self.eps.is_finite()) || self.max_iters == 0 {
            return Err(Failure(EXIT_CONFIG, "--eps must be positive and --max-iters at least 1".into()));
        }
        Ok(ScaOptions {
            epsilon: self.eps,
            max_iters: self.max_iters,
            ..ScaOptions::default()
        })
    }
}

/// Exit code and message.
struct Failure(u8, String);

impl From<ScaError> for Failure {
    fn from(e: ScaError) -> Self {
        let code = match &e {
            ScaError::Scenario(_) => EXIT_CONFIG,
            ScaError::InfeasibleScenario(_) | ScaError::InfeasibleSubproblem { .. } => EXIT_INFEASIBLE,
            ScaError::Conic(_) | ScaError::BadIterate(_) | ScaError::SolverFailure { .. } => EXIT_SOLVER,
        };
        Failure(code, e.to_string())
    }
}

fn read_config(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure(EXIT_CONFIG, format!("cannot read {}: {e}", path.display())))?;
    load_scenario(&text).map_err(|e| Failure(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    experiments::write_atomic(path, contents).map_err(|e| Failure(EXIT_IO, format!("cannot write {}: {e}", path.display())))
}

fn solve(
    config: &Path,
    scheme: Scheme,
    out: &Path,
    seed: u64,
    samples: usize,
    run: &RunArgs,
) -> Result<(), Failure> {
    let s = read_config(config)?;
    let opts = run.options()?;
    if samples < uav_secrecy::validation::MIN_SAMPLES {
        return Err(Failure(
            EXIT_CONFIG,
            format!("--samples must be at least {}", uav_secrecy::validation::MIN_SAMPLES),
        ));
    }
    let (sol, trace) = experiments::run_scheme(&s, scheme, &opts)?;
    let cert = experiments::certify(&s, scheme, &sol, &trace, opts.epsilon, samples, seed)
        .map_err(|e| Failure(EXIT_CONFIG, e.to_string()))?;

    write(&out.join("solution.json"), &experiments::to_json(&sol))?;
    write(&out.join("trajectory.csv"), &experiments::trajectory_csv(&sol))?;
    write(&out.join("trace.csv"), &experiments::trace_csv(&trace, !run.no_timing))?;
    write(&out.join("validation.json"), &experiments::to_json(&cert))?;

    eprintln!(
        "{scheme}: {} bits/s/Hz after {} rounds ({})",
        experiments::sig9(sol.objective_bps_hz),
        trace.iterations(),
        if trace.converged { "converged" } else { "iteration cap" }
    );
    if !cert.passed {
        let mut why = cert.gate.failures.clone();
        if !cert.trace_audit.passed {
            why.push(format!("trace: {}", cert.trace_audit.detail));
        }
        why.truncate(10);
        return Err(Failure(EXIT_CERTIFICATION, format!("certification failed: {}", why.join(", "))));
    }
    Ok(())
}

fn sweep(
    config: &Path,
    vary: Vary,
    values: &[f64],
    schemes: &[Scheme],
    out: &Path,
    run: &RunArgs,
) -> Result<(), Failure> {
    let base = read_config(config)?;
    let opts = run.options()?;
    for x in values {
        vary.apply(&base, *x).map_err(|e| Failure(EXIT_CONFIG, format!("{} = {x}: {e}", vary.as_str())))?;
    }
    let timing = !run.no_timing;
    let io_error = Mutex::new(None);
    let results = experiments::sweep(&base, vary, values, schemes, &opts, |scheme, i, p| {
        let mut p = p.clone();
        if !timing {
            p.wall_ms = 0.0;
        }
        eprintln!("{scheme} {}={}: {}", vary.as_str(), experiments::sig9(p.x_value), match &p.error {
            None => experiments::sig9(p.avg_secrecy_rate),
            Some(e) => format!("failed: {e}"),
        });
        let path = out.join("points").join(format!("{scheme}_{i:03}.json"));
        if let Err(f) = write(&path, &experiments::to_json(&p)) {
            *io_error.lock().unwrap() = Some(f);
        }
    });
    if let Some(f) = io_error.into_inner().unwrap() {
        return Err(f);
    }
    let mut failed = Vec::new();
    for (scheme, points) in &results {
        write(&out.join(format!("sweep_{scheme}.csv")), &experiments::sweep_csv(points, timing))?;
        failed.extend(points.iter().filter(|p| p.error.is_some()).map(|p| format!("{scheme}@{}", p.x_value)));
    }
    if !failed.is_empty() {
        return Err(Failure(EXIT_SOLVER, format!("failed points: {}", failed.join(", "))));
    }
    Ok(())
}

fn compare(config: &Path, out: &Path, run: &RunArgs) -> Result<(), Failure> {
    let base = read_config(config)?;
    let opts = run.options()?;
    let mut runs = experiments::compare(&base, &opts);
    if run.no_timing {
        for r in &mut runs {
            for row in r.trace.iter_mut().flat_map(|t| t.rows.iter_mut()) {
                row.wall_ms = 0.0;
            }
        }
    }
    write(&out.join("compare.csv"), &experiments::compare_csv(&runs, !run.no_timing))?;
    write(&out.join("compare.json"), &experiments::to_json(&runs))?;
    let mut failed = Vec::new();
    for r in &runs {
        match &r.error {
            None => eprintln!(
                "case {} {}: {} bits/s/Hz after {} rounds",
                r.case,
                r.scheme,
                experiments::sig9(r.objective_bps_hz),
                r.trace.as_ref().map_or(0, |t| t.iterations())
            ),
            Some(e) => failed.push(format!("case {} {}: {e}", r.case, r.scheme)),
        }
    }
    if !failed.is_empty() {
        return Err(Failure(EXIT_SOLVER, failed.join("; ")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { config, model, out, seed, samples, run } => solve(config, *model, out, *seed, *samples, run),
        Command::Sweep { config, vary, values, schemes, out, run } => sweep(config, *vary, values, schemes, out, run),
        Command::Compare { config, out, run } => compare(config, out, run),
        Command::Fixture => {
            println!("{}", uav_secrecy::default_fixture().to_config_json());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
