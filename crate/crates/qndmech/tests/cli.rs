//! End-to-end tests of the `qndmech` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qndmech"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qndmech-test-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn simulate_with_zero_coupling_prints_zero_entanglement() {
    let dir = tmp_dir("sim-zero");
    let cfg = write_config(&dir, "[protocol]\nk1 = 0\nk2 = 0\nk_f = 0\n");
    let out = run_ok(&["simulate", "--config", cfg.to_str().unwrap()]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("logarithmic negativity E = 0"),
        "unexpected report:\n{stdout}"
    );
}

#[test]
fn simulate_reports_entanglement_at_the_reported_hardware_point() {
    let out = run_ok(&["simulate"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    // defaults: K1 = 1, K2 = 8, eta = 1, n_th = 0, unsqueezed
    let e_line = stdout
        .lines()
        .find(|l| l.starts_with("logarithmic negativity"))
        .unwrap();
    let value: f64 = e_line.rsplit('=').next().unwrap().trim().parse().unwrap();
    assert!(value > 0.7, "expected E > 0.7, got {value}");
}

#[test]
fn invalid_transmittivity_is_rejected_by_name() {
    let dir = tmp_dir("bad-eta");
    let cfg = write_config(&dir, "[protocol]\neta = 1.2\n");
    let out = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("eta"),
        "stderr does not name the key: {stderr}"
    );
}

#[test]
fn unknown_config_keys_fail_with_line_numbers() {
    let dir = tmp_dir("bad-key");
    let cfg = write_config(&dir, "[protocol]\nk1 = 1\nsqueeze = 2\n");
    let out = bin()
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("line 3") && stderr.contains("squeeze"),
        "{stderr}"
    );
}

#[test]
fn fig2_emits_six_curves_with_marker_and_is_byte_stable() {
    let dir = tmp_dir("fig2");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    run_ok(&["figure", "fig2", "--out", out_a.to_str().unwrap()]);
    run_ok(&["figure", "fig2", "--out", out_b.to_str().unwrap()]);

    let csvs: Vec<_> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    assert_eq!(csvs.len(), 6, "expected six curves, got {csvs:?}");

    let svg = std::fs::read_to_string(out_a.join("fig2.svg")).unwrap();
    assert!(svg.contains("12.7 dB"), "squeezing bound marker missing");

    for name in csvs.iter().chain(std::iter::once(&"fig2.svg".to_string())) {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    let sample = std::fs::read_to_string(out_a.join("fig2_adiabatic_k1_1_k2_8.csv")).unwrap();
    let mut lines = sample.lines();
    assert!(lines.next().unwrap().starts_with("# qndmech"));
    assert_eq!(lines.next().unwrap(), "squeezing_db,e,model");
}

#[test]
fn fig3_covers_the_bath_loss_grid() {
    let dir = tmp_dir("fig3");
    let cfg = write_config(&dir, "[figure]\nsqueezing_db_points = 5\n");
    let out = dir.join("out");
    run_ok(&[
        "figure",
        "fig3",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let names: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.iter().filter(|n| n.ends_with(".csv")).count(), 6);
    assert!(names.contains(&"fig3.svg".to_string()));
}

#[test]
fn fig4_requires_complete_electromechanical_preset() {
    let dir = tmp_dir("fig4-em");
    let cfg = write_config(&dir, "[electromechanical]\nkappa_over_2pi_hz = 5e6\n");
    let out = bin()
        .args([
            "figure",
            "fig4",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("gamma_over_2pi_hz") && stderr.contains("n_th"),
        "missing keys not listed: {stderr}"
    );
}

#[test]
fn fig5_compares_rwa_and_counter_rotating_curves() {
    let dir = tmp_dir("fig5");
    // a small cavity (kappa tau = 20) keeps the kernel integration quick
    let cfg = write_config(
        &dir,
        "[hardware]\nkappa_over_2pi_hz = 7.0736e5\ntau_us = 4.5\ngamma_over_2pi_hz = 0\n\
         [figure]\nsqueezing_db_points = 3\n",
    );
    let out = dir.join("out");
    run_ok(&[
        "figure",
        "fig5",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let rwa = std::fs::read_to_string(out.join("fig5_rwa_k1_1_k2_8.csv")).unwrap();
    let non = std::fs::read_to_string(out.join("fig5_non-rwa_k1_1_k2_8.csv")).unwrap();
    let parse_e = |text: &str| -> Vec<f64> {
        text.lines()
            .skip(2)
            .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
            .collect()
    };
    for (r, n) in parse_e(&rwa).iter().zip(parse_e(&non)) {
        assert!(
            n <= r + 1e-9,
            "counter-rotating curve above RWA: {n} vs {r}"
        );
    }
}

#[test]
fn optimize_with_zero_ceiling_reports_zero() {
    let dir = tmp_dir("opt-zero");
    let cfg = write_config(
        &dir,
        "[optimize]\ng_max_over_kappa = 0\nn_seeds = 16\nn_refine = 1\n[model]\nkind = full-cavity\n",
    );
    let out = dir.join("out");
    run_ok(&[
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    let summary = std::fs::read_to_string(out.join("optimize_summary.txt")).unwrap();
    assert!(summary.contains("E* = 0"), "summary:\n{summary}");
    assert!(out.join("optimize_trace.csv").exists());
    assert!(out.join("optimize_result.csv").exists());
}

#[test]
fn optimize_is_deterministic_under_a_seed() {
    let dir = tmp_dir("opt-det");
    let cfg = write_config(
        &dir,
        "[optimize]\ng_max_over_kappa = 0.03\nn_seeds = 24\nn_refine = 1\n\
         kappa_tau_min = 10\nkappa_tau_max = 500\n[model]\nkind = full-cavity\n",
    );
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        run_ok(&[
            "optimize",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "42",
        ]);
    }
    let a = std::fs::read(out_a.join("optimize_trace.csv")).unwrap();
    let b = std::fs::read(out_b.join("optimize_trace.csv")).unwrap();
    assert_eq!(a, b, "traces differ under identical seeds");
}

#[test]
fn sweep_single_point_matches_simulate() {
    let dir = tmp_dir("sweep-one");
    let cfg = write_config(
        &dir,
        "[sweep]\nsqueezing_db = 6\nk1 = 1\nk2 = 8\n[model]\nkind = adiabatic\n",
    );
    let out = dir.join("out");
    run_ok(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let data_rows: Vec<&str> = table.lines().skip(2).collect();
    assert_eq!(data_rows.len(), 1);
    let e_sweep: f64 = data_rows[0].split(',').nth(5).unwrap().parse().unwrap();

    let sim_cfg = write_config(&dir, "[protocol]\nsqueezing_db = 6\nk1 = 1\nk2 = 8\n");
    let out = run_ok(&["simulate", "--config", sim_cfg.to_str().unwrap()]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let e_line = stdout
        .lines()
        .find(|l| l.starts_with("logarithmic negativity"))
        .unwrap();
    let e_sim: f64 = e_line.rsplit('=').next().unwrap().trim().parse().unwrap();
    assert!(
        (e_sweep - e_sim).abs() < 1e-12,
        "sweep {e_sweep} vs simulate {e_sim}"
    );
}
