// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL_DESIGN: &str = "\
n_particles = 2
target_kind = W
delta_xi = 0.1
horizon = 0.5
dt = 0.05
moment_order_xi = 2
u_init_x = 3
u_init_z = 3
max_outer_iters = 8
eval_grid_nx = 5
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dicke-pulse"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn design_writes_all_outputs_with_documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL_DESIGN);
    let out = dir.path().join("out");
    let o = run(&["design", "--config", s(&cfg), "--out", s(&out)]);
    let code = o.status.code().unwrap();
    assert!(
        code == 0 || code == 2,
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let first = |f: &str| {
        fs::read_to_string(out.join(f))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(first("pulse.csv"), "t,u_x,u_z");
    assert_eq!(first("history.csv"), "iter,objective,lambda,accepted");
    assert_eq!(first("fidelity_map.csv"), "xi,zeta,fidelity");
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"min_fidelity\""));
    assert_eq!(
        fs::read_to_string(out.join("pulse.csv"))
            .unwrap()
            .lines()
            .count(),
        11
    );
    assert_eq!(
        fs::read_to_string(out.join("fidelity_map.csv"))
            .unwrap()
            .lines()
            .count(),
        6
    );
}

#[test]
fn design_is_byte_identical_and_simulate_reproduces_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL_DESIGN);
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    run(&["design", "--config", s(&cfg), "--out", s(&a)]);
    run(&["design", "--config", s(&cfg), "--out", s(&b)]);
    for f in [
        "pulse.csv",
        "history.csv",
        "fidelity_map.csv",
        "summary.json",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let pulse = a.join("pulse.csv");
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--pulse",
        s(&pulse),
        "--out",
        s(&c),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(
        fs::read(a.join("summary.json")).unwrap(),
        fs::read(c.join("summary.json")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("fidelity_map.csv")).unwrap(),
        fs::read(c.join("fidelity_map.csv")).unwrap()
    );
}

fn constant_pulse(path: &Path, steps: usize, dt: f64, u: f64) {
    let mut text = String::from("t,u_x,u_z\n");
    for k in 0..steps {
        text.push_str(&format!("{:.16e},{u},{u}\n", k as f64 * dt));
    }
    fs::write(path, text).unwrap();
}

fn summary_value(dir: &Path, key: &str) -> f64 {
    let text = fs::read_to_string(dir.join("summary.json")).unwrap();
    let line = text
        .lines()
        .find(|l| l.contains(&format!("\"{key}\"")))
        .unwrap();
    line.split(':')
        .nth(1)
        .unwrap()
        .trim()
        .trim_end_matches(',')
        .parse()
        .unwrap()
}

#[test]
fn simulate_zero_and_constant_pulses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w.cfg",
        "n_particles = 5\ntarget_kind = W\ndelta_xi = 0.2\n",
    );
    let zero = dir.path().join("zero.csv");
    constant_pulse(&zero, 900, 0.01, 0.0);
    let out = dir.path().join("zero_out");
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--pulse",
        s(&zero),
        "--out",
        s(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(summary_value(&out, "mean_fidelity").abs() < 1e-12);

    let three = dir.path().join("three.csv");
    constant_pulse(&three, 900, 0.01, 3.0);
    let out = dir.path().join("three_out");
    run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--pulse",
        s(&three),
        "--out",
        s(&out),
    ]);
    assert!((summary_value(&out, "I_ux") - 27.0).abs() < 1e-9);
    assert_eq!(summary_value(&out, "I_dux"), 0.0);
}

#[test]
fn simulate_rejects_length_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "w.cfg", "n_particles = 3\ntarget_kind = W\n");
    let short = dir.path().join("short.csv");
    constant_pulse(&short, 10, 0.01, 1.0);
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--pulse",
        s(&short),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("900"));
}

#[test]
fn bad_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.cfg",
        "n_particles = 5\ntarget_kind = W\nbogus = 1\n",
    );
    let o = run(&["design", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("bogus"), "{err}");
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.cfg",
        "n_particles = 5\ntarget_kind = W\ndelta_xi = 0.2\n",
    );
    let out = dir.path().join("v");
    let o = run(&["verify", "--config", s(&cfg), "--out", s(&out)]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    let report = fs::read_to_string(out.join("verify.json")).unwrap();
    assert!(report.contains("\"passed\": true"));
    assert!(report.contains("\"duality_gap_k14\""));
}
