//! Robust UAV trajectory and power design for secure cognitive-radio links.
//!
//! A UAV secondary transmitter serves one ground user while eavesdroppers and
//! primary users sit at imperfectly known locations. Two designs maximize the
//! average secrecy rate under an interference budget:
//!
//! - [`wcr`]: every location inside a disk around the estimate (S-procedure LMIs);
//! - [`ocr`]: Gaussian location errors with outage probabilities (Bernstein bounds).
//!
//! Both run successive convex approximation ([`sca`]) over conic subproblems
//! ([`conic`]) solved by Clarabel. [`validation`] re-checks results with
//! independent oracles; [`experiments`] drives sweeps and comparisons.

// Links the system OpenBLAS used by the SDP backend.
use openblas_src as _;

pub mod baselines;
pub mod channel;
pub mod conic;
pub mod experiments;
pub mod geom;
pub mod ocr;
pub mod sca;
pub mod scenario;
pub mod units;
pub mod validation;
pub mod wcr;

pub use sca::{ScaError, ScaOptions, Solution, SolveTrace, TraceRow, TrajectoryMode, WcrIterate};
pub use scenario::{default_fixture, fixture, load_scenario, Scenario, ScenarioError, UncertainNode, UncertaintyModel};
