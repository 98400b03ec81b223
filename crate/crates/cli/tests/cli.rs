// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gkp(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkp"))
        .args(args)
        .current_dir(cwd)
        .env_remove("GKP_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

const SMALL: &str = r#"
[lattice]
depth = 200.0
points_per_period = 64
basis = 4

[target]
kind = "fock"
level = 1

[optimizer]
duration = 60e-6
n_samples = 60
multistart = 2
filter_cutoff = 2e5
filter_softness = 1e5
"#;

#[test]
fn malformed_config_exits_2_without_output() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "bad.toml", "[lattice]\ndepth = \"deep\"\n");
    let out = gkp(
        &["spectrum", "-c", cfg.to_str().unwrap(), "-o", "out"],
        d.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(!d.path().join("out").exists());

    let cfg = write(d.path(), "k.toml", "[target]\nk = 2\n");
    let out = gkp(
        &["target", "-c", cfg.to_str().unwrap(), "-o", "out"],
        d.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.path().join("out").exists());
}

#[test]
fn spectrum_lists_bound_states() {
    let d = tempfile::tempdir().unwrap();
    let out = gkp(&["spectrum", "-o", "out"], d.path());
    assert!(out.status.success());
    let rows = csv_rows(&d.path().join("out/spectrum/energies.csv"));
    assert!(rows.len() >= 24);
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1]));
    let s = json(&d.path().join("out/spectrum/summary.json"));
    assert_eq!(s["n_bound"].as_u64().unwrap() as usize, rows.len());
    assert!(d.path().join("out/spectrum/config.toml").is_file());

    let cfg = write(d.path(), "flat.toml", "[lattice]\ndepth = 0.0\n");
    let out = gkp(
        &["spectrum", "-c", cfg.to_str().unwrap(), "-o", "flat"],
        d.path(),
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("no bound states"));
    assert!(csv_rows(&d.path().join("flat/spectrum/energies.csv")).is_empty());
}

#[test]
fn target_meets_reconstruction_threshold() {
    let d = tempfile::tempdir().unwrap();
    let out = gkp(&["target", "-o", "out"], d.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = json(&d.path().join("out/target/summary.json"));
    assert!(s["reconstruction_fidelity"].as_f64().unwrap() >= 0.99);
    let fock = csv_rows(&d.path().join("out/target/fock_coefficients.csv"));
    assert_eq!(fock.len(), 24);
    // GKP0 has even parity: odd Fock amplitudes vanish
    assert!(fock
        .iter()
        .filter(|r| r[0] as usize % 2 == 1)
        .all(|r| r[3] < 1e-20));
}

#[test]
fn target_in_too_small_basis_is_infeasible() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "t.toml", "[lattice]\ndepth = 200.0\nbasis = 4\n");
    let out = gkp(
        &["target", "-c", cfg.to_str().unwrap(), "-o", "out"],
        d.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("captures"));
}

#[test]
fn target_sweep_is_monotone() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "s.toml",
        "[sweep]\nzeta_min = 4.0\nzeta_max = 8.0\nzeta_step = 1.0\n",
    );
    let out = gkp(
        &[
            "target",
            "--sweep",
            "-c",
            cfg.to_str().unwrap(),
            "-o",
            "out",
        ],
        d.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&d.path().join("out/target/basis_curve.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows
        .windows(2)
        .all(|w| w[1][1] >= w[0][1] && w[1][2] >= w[0][2]));
    assert!(rows.iter().all(|r| r[3] >= 0.99));
}

#[test]
fn self_transfer_succeeds_immediately() {
    let d = tempfile::tempdir().unwrap();
    let cfg = SMALL.replace("level = 1", "level = 0");
    let cfg = write(d.path(), "self.toml", &cfg);
    let out = gkp(
        &["optimize", "-c", cfg.to_str().unwrap(), "-o", "out"],
        d.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&d.path().join("out/optimize/result.json"));
    assert_eq!(r["reached_goal"], Value::Bool(true));
    assert_eq!(r["termination"], "fidelity_goal");
    assert_eq!(r["iterations"], 0);
}

#[test]
fn optimize_is_reproducible_and_analyze_agrees() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "small.toml", SMALL);
    let cfg = cfg.to_str().unwrap();
    let out = gkp(&["--jobs", "1", "optimize", "-c", cfg, "-o", "a"], d.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = gkp(&["--jobs", "2", "optimize", "-c", cfg, "-o", "b"], d.path());
    assert!(out.status.success());
    let wave =
        |root: &str| std::fs::read(d.path().join(root).join("optimize/waveform.csv")).unwrap();
    assert_eq!(wave("a"), wave("b"));

    // rerun from the echoed config; the echo itself is left untouched
    let echo = d.path().join("a/optimize/config.toml");
    let before = std::fs::read(&echo).unwrap();
    let out = gkp(&["optimize", "-c", echo.to_str().unwrap()], d.path());
    assert!(out.status.success());
    assert_eq!(std::fs::read(&echo).unwrap(), before);
    assert_eq!(
        wave("a"),
        std::fs::read(d.path().join("a/optimize/waveform.csv")).unwrap()
    );

    let r = json(&d.path().join("a/optimize/result.json"));
    let stored = r["fidelity"].as_f64().unwrap();
    assert!(r["samples"].as_array().unwrap().len() == 60);
    let traj = csv_rows(&d.path().join("a/optimize/trajectory.csv"));
    let last = traj.last().unwrap();
    assert!(
        (last[3] - stored).abs() < 1e-9,
        "pop_1 at the end equals the fidelity"
    );

    let out = gkp(&["analyze", "-o", "a"], d.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep = json(&d.path().join("a/analyze/report.json"));
    assert!(rep["difference"].as_f64().unwrap() < 1e-10);
    for name in ["target", "achieved"] {
        let h = json(&d.path().join(format!("a/analyze/wigner_{name}.json")));
        assert!((h["integral"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    }
    let rob = csv_rows(&d.path().join("a/analyze/robustness.csv"));
    let nominal = rob.iter().find(|r| r[0] == 1.0).expect("scale 1 row");
    assert!((nominal[2] - stored).abs() < 1e-10);
}

#[test]
fn analyze_without_bundle_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let out = gkp(&["analyze", "--bundle", "missing", "-o", "out"], d.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn feasibility_maps_and_queries() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "f.toml",
        "[feasibility]\nn_power = 1\nn_wavelength = 5\n",
    );
    let out = gkp(
        &["feasibility", "-c", cfg.to_str().unwrap(), "-o", "out"],
        d.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = json(&d.path().join("out/feasibility/summary.json"));
    let ratio = s["lifetime_ratio"][1].as_f64().unwrap();
    assert!(ratio > 1.0, "Cs outlives Rb at equal power, got {ratio}");
    let map = csv_rows(&d.path().join("out/feasibility/Rb87_map.csv"));
    assert_eq!(map.len(), 5);

    let out = gkp(
        &["feasibility", "--power", "0.1", "--wavelength", "785e-9"],
        d.path(),
    );
    assert!(out.status.success());
    let line = String::from_utf8_lossy(&out.stdout);
    assert_eq!(line.lines().count(), 1);
    assert!(line.contains("U_r") && line.contains("tau"));

    let cfg = write(
        d.path(),
        "w.toml",
        "[feasibility]\nwavelength_min = 700e-9\n",
    );
    let out = gkp(
        &["feasibility", "-c", cfg.to_str().unwrap(), "-o", "w"],
        d.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_root_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gkp"))
        .args([
            "feasibility",
            "-c",
            write(
                d.path(),
                "f.toml",
                "[feasibility]\nn_power = 2\nn_wavelength = 2\nspecies = [\"Cs133\"]\n",
            )
            .to_str()
            .unwrap(),
        ])
        .current_dir(d.path())
        .env("GKP_OUTPUT_ROOT", "envroot")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(d
        .path()
        .join("envroot/feasibility/Cs133_map.json")
        .is_file());
}
