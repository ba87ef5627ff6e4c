//! End-to-end checks of the command-line surface and its exit codes.

use std::path::Path;
use std::process::{Command, Output};

use lienard::analysis::poincare_radii;
use lienard::driver::run_trajectories;
use lienard::presets::preset;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lienard"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const CONFIG: &str = r#"
scheme = "heun"
dt = 0.00628318530717959
representation = "phase"
t_total = 50.0
seed = 11
initial = [[2.0, 0.0]]

[damping]
family = "position"
basis = "a"
coeffs = [-1.0, 1.0]

[params]
omega0 = 1.0
gamma = 0.5
n = 1
theta = 0.0

[noise]
kind = "none"
"#;

#[test]
fn census_prints_cycle_report() {
    let out = run_ok(&[
        "census",
        "--family",
        "position",
        "--basis",
        "a",
        "--coeffs=-1.0,1.0,-0.144,0.005",
        "--gamma",
        "0.00025",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("cycles=3"), "{text}");
    assert_eq!(text.matches("stable=true").count(), 2);
    assert_eq!(text.matches("stable=false").count(), 1);
}

#[test]
fn average_prints_amplitudes() {
    let out = run_ok(&[
        "average",
        "--basis",
        "m",
        "--coeffs=-1.0,1.0",
        "--gamma",
        "0.5",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("roots=1"), "{text}");
    let amp: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .strip_prefix("amplitude=")
        .unwrap()
        .parse()
        .unwrap();
    assert!((amp - 2.0).abs() < 1e-6);
}

#[test]
fn preset_list_and_print() {
    let out = run_ok(&["preset", "--list"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in lienard::presets::PRESET_NAMES {
        assert!(text.contains(name));
    }

    let out = run_ok(&["preset", "fig2b", "--print"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("kind = \"internal\""), "{text}");
    let config = lienard::config::parse_config(&text).unwrap();
    assert_eq!(config.params.gamma, 2.0);

    let out = bin().args(["preset", "fig9z"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_runs_and_respects_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(&config_path, CONFIG).unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "simulate",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "77",
        "--ensemble-size",
        "2",
    ]);
    assert!(out_dir.join("trajectory_000.csv").exists());
    assert!(out_dir.join("trajectory_001.csv").exists());
    assert!(out_dir.join("cycles.txt").exists());
    assert!(out_dir.join("radial_stats.txt").exists());
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 77"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.toml");
    std::fs::write(&config_path, CONFIG.replace("n = 1", "n = 2")).unwrap();
    let out = bin()
        .args(["simulate", "--config", config_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.n"));
}

#[test]
fn blow_up_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("stiff.toml");
    std::fs::write(
        &config_path,
        CONFIG
            .replace(
                "dt = 0.00628318530717959",
                "dt = 0.5\nallow_coarse_dt = true",
            )
            .replace("gamma = 0.5", "gamma = 2.0")
            .replace("[[2.0, 0.0]]", "[[30.0, 0.0]]"),
    )
    .unwrap();
    let out = bin()
        .args([
            "simulate",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blew up"));
}

#[test]
fn noise_check_passes_and_fails_by_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("corr.csv");
    let out = run_ok(&[
        "noise-check",
        "--gamma",
        "0.5",
        "--theta",
        "2.0",
        "--members",
        "150",
        "--len",
        "2000",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let corr = std::fs::read_to_string(&csv).unwrap();
    assert!(corr.starts_with("lag,C\n"));

    // An absurd tolerance must fail with the dedicated exit code.
    let out = bin()
        .args([
            "noise-check",
            "--members",
            "150",
            "--len",
            "2000",
            "--tolerance",
            "1e-9",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bath_reports_gamma_and_writes_series() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bath");
    let out = run_ok(&[
        "bath",
        "--modes",
        "256",
        "--gamma-target",
        "2e-4",
        "--alpha0-re",
        "10.0",
        "--t-total",
        "50",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("gamma_from_bath=2.0"), "{text}");
    assert!(out_dir.join("bath_alpha.csv").exists());
    assert!(out_dir.join("bath_force.csv").exists());
}

#[test]
fn fig2a_preset_converges_to_a_closed_poincare_sequence() {
    let config = preset("fig2a").unwrap();
    let trajectories = run_trajectories(&config).unwrap();
    assert_eq!(trajectories.len(), 2);
    for traj in &trajectories {
        let radii = poincare_radii(traj, 0.0).unwrap();
        let tail = &radii[radii.len() - 12..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        for r in tail {
            assert!(
                (r - mean).abs() / mean < 1e-3,
                "Poincare sequence not closed: {r} vs {mean}"
            );
        }
    }
}

#[test]
fn replay_reproduces_preset_outputs(
) {
    // Exercise `preset` -> `replay` through the binary on a quick preset.
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    run_ok(&[
        "simulate",
        "--config",
        &write_quick_config(dir.path()),
        "--out",
        first.to_str().unwrap(),
    ]);
    run_ok(&[
        "replay",
        first.join("manifest.json").to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    let a = std::fs::read(first.join("trajectory_000.csv")).unwrap();
    let b = std::fs::read(second.join("trajectory_000.csv")).unwrap();
    assert_eq!(a, b);
}

fn write_quick_config(dir: &Path) -> String {
    let path = dir.join("quick.toml");
    std::fs::write(&path, CONFIG.replace("kind = \"none\"", "kind = \"vacuum\"")).unwrap();
    path.to_str().unwrap().to_string()
}
