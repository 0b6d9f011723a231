use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uav-secrecy"))
}

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/scenario.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// The fixture shortened to 20 slots with endpoints that fit.
fn short_config(dir: &Path) -> PathBuf {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(fixture_path()).unwrap()).unwrap();
    v["n_slots"] = 20.into();
    v["q_init_xy_m"] = serde_json::json!([-90.0, 0.0]);
    v["q_final_xy_m"] = serde_json::json!([90.0, 0.0]);
    let p = dir.join("short.json");
    fs::write(&p, v.to_string()).unwrap();
    p
}

#[test]
fn help_exits_zero() {
    for args in [&["--help"][..], &["solve", "--help"], &["sweep", "--help"], &["compare", "--help"]] {
        let out = run(args);
        assert_eq!(code(&out), 0, "{args:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn fixture_command_matches_fixture_file() {
    let out = run(&["fixture"]);
    assert_eq!(code(&out), 0);
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    let mut file: Value = serde_json::from_str(&fs::read_to_string(fixture_path()).unwrap()).unwrap();
    file.as_object_mut().unwrap().remove("_note");
    assert_eq!(printed, file);
}

#[test]
fn fixture_solve_writes_sixty_waypoints() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("wcr");
    let fixture = fixture_path();
    let out = run(&[
        "solve",
        fixture.to_str().unwrap(),
        "--model",
        "wcr",
        "--max-iters",
        "3",
        "--no-timing",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let sol: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("solution.json")).unwrap()).unwrap();
    assert_eq!(sol["waypoints"].as_array().unwrap().len(), 60);
    assert_eq!(sol["powers"].as_array().unwrap().len(), 60);
    assert!(sol["objective_bps_hz"].is_number());
    assert!(sol["slacks"]["beta"].is_array());

    let traj = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("slot,x_m,y_m,power_w"));
    assert_eq!(traj.lines().count(), 61);
    assert!(traj.lines().nth(1).unwrap().starts_with("0,-200,0,"));
    assert!(traj.lines().last().unwrap().starts_with("59,200,0,"));

    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iteration,objective,solver_status,wall_ms"));
    // initial row plus three rounds
    assert_eq!(trace.lines().count(), 5);
    assert!(trace.lines().skip(1).all(|l| l.ends_with(",0")));

    let val: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("validation.json")).unwrap()).unwrap();
    assert_eq!(val["scheme"], "wcr");
    assert_eq!(val["passed"], true);
    assert_eq!(val["gate"]["kind"], "worst_case");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_config(dir.path());
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("run{k}"));
        let out = run(&[
            "solve",
            config.to_str().unwrap(),
            "--model",
            "ocr",
            "--max-iters",
            "4",
            "--seed",
            "7",
            "--samples",
            "2000",
            "--no-timing",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(out_dir);
    }
    for name in ["solution.json", "trajectory.csv", "trace.csv", "validation.json"] {
        let a = fs::read(outputs[0].join(name)).unwrap();
        let b = fs::read(outputs[1].join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn sweep_writes_one_csv_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_config(dir.path());
    let out_dir = dir.path().join("sweep");
    let out = run(&[
        "sweep",
        config.to_str().unwrap(),
        "--vary",
        "it_threshold",
        "--values",
        "1e-7,2.5e-7",
        "--schemes",
        "wcr,fixed1",
        "--max-iters",
        "3",
        "--no-timing",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for scheme in ["wcr", "fixed1"] {
        let csv = fs::read_to_string(out_dir.join(format!("sweep_{scheme}.csv"))).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x_value,avg_secrecy_rate,wall_ms,iterations");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1.00000000e-7,"));
        assert!(lines[2].starts_with("2.50000000e-7,"));
        for i in 0..2 {
            assert!(out_dir.join("points").join(format!("{scheme}_{i:03}.json")).exists());
        }
    }
    assert!(!out_dir.join("sweep_ocr.csv").exists());
}

#[test]
fn single_value_sweep_matches_solve() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_config(dir.path());
    let sweep_dir = dir.path().join("sweep");
    let solve_dir = dir.path().join("solve");
    let common = ["--max-iters", "3", "--no-timing"];
    let mut args = vec!["sweep", config.to_str().unwrap(), "--vary", "T", "--values", "20", "--schemes", "wcr"];
    args.extend(common);
    args.extend(["--out", sweep_dir.to_str().unwrap()]);
    assert_eq!(code(&run(&args)), 0);
    let mut args = vec!["solve", config.to_str().unwrap(), "--model", "wcr"];
    args.extend(common);
    args.extend(["--out", solve_dir.to_str().unwrap()]);
    assert_eq!(code(&run(&args)), 0);

    let csv = fs::read_to_string(sweep_dir.join("sweep_wcr.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let sol: Value = serde_json::from_str(&fs::read_to_string(solve_dir.join("solution.json")).unwrap()).unwrap();
    let rate: f64 = row[1].parse().unwrap();
    assert!((rate - sol["objective_bps_hz"].as_f64().unwrap()).abs() < 1e-8);
    let trace = fs::read_to_string(solve_dir.join("trace.csv")).unwrap();
    assert_eq!(row[3], (trace.lines().count() - 2).to_string());
}

#[test]
fn compare_writes_convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = short_config(dir.path());
    let out_dir = dir.path().join("cmp");
    let out = run(&[
        "compare",
        config.to_str().unwrap(),
        "--max-iters",
        "2",
        "--no-timing",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("compare.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "case,scheme,iteration,objective,solver_status,wall_ms");
    // 3 cases x 2 schemes x (initial row + 2 rounds)
    assert_eq!(lines.len(), 1 + 3 * 2 * 3);
    for case in 1..=3 {
        for scheme in ["wcr", "ocr"] {
            let prefix = format!("{case},{scheme},");
            assert_eq!(lines.iter().filter(|l| l.starts_with(&prefix)).count(), 3);
        }
    }
    let json: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("compare.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 6);
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("x");
    let out_dir = out_dir.to_str().unwrap();

    // config errors
    assert_eq!(code(&run(&["solve", "/definitely/missing.json", "--out", out_dir])), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&run(&["solve", bad.to_str().unwrap(), "--out", out_dir])), 2);
    let fixture = fixture_path();
    assert_eq!(code(&run(&["solve", fixture.to_str().unwrap(), "--samples", "10", "--out", out_dir])), 2);
    assert_eq!(code(&run(&["solve", fixture.to_str().unwrap(), "--model", "bogus"])), 2);
    assert_eq!(code(&run(&["solve", fixture.to_str().unwrap(), "--eps", "0", "--out", out_dir])), 2);

    // a location error too large for any safe interference bound
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&fixture).unwrap()).unwrap();
    v["pus"][0]["gaussian_std_m"] = 500.0.into();
    let wide = dir.path().join("wide.json");
    fs::write(&wide, v.to_string()).unwrap();
    let out = run(&["solve", wide.to_str().unwrap(), "--model", "ocr", "--out", out_dir]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!Path::new(out_dir).join("solution.json").exists());
}
