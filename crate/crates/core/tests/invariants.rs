//! Structural properties every design must satisfy, on a short flight.

use uav_secrecy::experiments::{run_scheme, run_scheme_from, Scheme};
use uav_secrecy::geom;
use uav_secrecy::{default_fixture, ScaOptions, Scenario, Solution};

fn short() -> Scenario {
    let mut s = default_fixture();
    s.n_slots = 20;
    s.q_init_xy = [-90.0, 0.0];
    s.q_final_xy = [90.0, 0.0];
    s
}

fn opts() -> ScaOptions {
    ScaOptions {
        max_iters: 15,
        ..ScaOptions::default()
    }
}

fn assert_within_limits(s: &Scenario, sol: &Solution) {
    assert_eq!(sol.waypoints.len(), s.n_slots);
    assert_eq!(sol.powers.len(), s.n_slots);
    assert_eq!(sol.waypoints[0], s.q_init_xy);
    assert_eq!(sol.waypoints[s.n_slots - 1], s.q_final_xy);
    for w in sol.waypoints.windows(2) {
        assert!(geom::dist(w[0], w[1]) <= s.max_step_m() * (1.0 + 1e-6));
    }
    for p in &sol.powers {
        assert!(*p > 0.0 && *p <= s.p_max_w * (1.0 + 1e-6), "power {p}");
    }
    let mean = sol.powers.iter().sum::<f64>() / s.n_slots as f64;
    assert!(mean <= s.p_avg_w * (1.0 + 1e-6), "mean power {mean}");
    assert!(sol.objective_bps_hz.is_finite() && sol.objective_bps_hz >= 0.0);
}

fn check(scheme: Scheme) {
    let s = short();
    let (sol, trace) = run_scheme(&s, scheme, &opts()).unwrap();
    assert_within_limits(&s, &sol);
    assert!(trace.iterations() >= 1);

    // starting again from the result can only keep or improve it
    let (again, _) = run_scheme_from(&s, scheme, &sol, &opts()).unwrap();
    assert_within_limits(&s, &again);
    assert!(
        again.objective_bps_hz >= sol.objective_bps_hz - 1e-6,
        "{scheme}: {} then {}",
        sol.objective_bps_hz,
        again.objective_bps_hz
    );
}

#[test]
fn wcr_design_is_feasible_and_a_fixed_point() {
    check(Scheme::Wcr);
}

#[test]
fn ocr_design_is_feasible_and_a_fixed_point() {
    check(Scheme::Ocr);
}

#[test]
fn fixed_trajectory_designs_keep_the_path() {
    let s = short();
    let path = uav_secrecy::baselines::fly_hover_fly(&s);
    for scheme in [Scheme::Fixed1, Scheme::Fixed2] {
        let (sol, _) = run_scheme(&s, scheme, &opts()).unwrap();
        assert_within_limits(&s, &sol);
        assert_eq!(sol.waypoints, path);
    }
}
