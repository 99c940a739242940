use std::path::Path;
use std::process::{Command, Output};

fn opo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opo")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn analytic_commands_succeed() {
    for args in [
        vec!["params"],
        vec!["params", "--sigma", "2"],
        vec!["classical"],
        vec!["analytic", "--sigma", "2"],
        vec!["analytic", "--what", "brackets", "--phi", "45"],
        vec!["analytic", "--what", "spectra", "--omega-grid", "0:4:5"],
        vec!["analytic", "--what", "fixed-lo", "--omega-grid", "0:1:3", "--d", "1e-6", "--T", "500"],
        vec!["spectrum", "--points", "5"],
        vec!["fixed-lo", "--points", "3", "--form", "doubled"],
        vec!["sweep", "--axis", "T", "--grid", "1e2:1e6:5:log"],
        vec!["sweep", "--preset", "fig3b"],
        vec!["validate", "--criteria", "1,2"],
    ] {
        let o = opo(&args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn spectrum_csv_header_and_values() {
    let o = opo(&["spectrum", "--points", "2", "--omega-max", "0"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("omega,v_dark_phi"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    // phi = 90 deg, omega = 0: perfect dark-mode squeezing
    assert!(row[1].abs() < 1e-15);
}

#[test]
fn classical_pattern_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pattern.csv");
    let o = opo(&["classical", "--sigma", "2", "--theta", "0.3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,y,re,im");
    assert!(text.lines().count() > 100);
}

#[test]
fn analytic_csv_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let o = opo(&["analytic", "--what", "spectra", "--phi", "90", "--omega-grid", "0:2:3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    // 1 - 1/(1 + omega^2/4) at omega = 2
    assert!((rows[2][1] - 0.5).abs() < 1e-15);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(meta["phi_deg"], 90.0);
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(code(&opo(&["simulate", "--trajectories", "4"])), 2, "missing seed");
    assert_eq!(code(&opo(&["sweep", "--axis", "psi", "--grid", "0:1:3"])), 2);
    assert_eq!(code(&opo(&["sweep", "--axis", "d", "--grid", "0:1:3:log"])), 2);
    assert_eq!(code(&opo(&["analytic", "--sigma", "0.5"])), 2);
    assert_eq!(code(&opo(&["compare", "/nonexistent/run"])), 2);
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = opo(&[
        "simulate", "--seed", "1", "--trajectories", "40", "--g", "3", "--dt", "0.3", "--no-checkpoint", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

fn small_run(out: &Path, seed: &str, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--seed", seed, "--trajectories", "40", "--tau-end", "18", "--omega-points", "5", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    opo(&args)
}

#[test]
fn simulate_compare_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&small_run(&a, "11", &[])), 0);
    assert_eq!(code(&small_run(&b, "12", &["--workers", "3"])), 0);
    for f in ["manifest.json", "variance.csv", "spectrum_phi0.csv", "spectrum_phi90.csv"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let o = opo(&["compare", a.to_str().unwrap(), "--against", b.to_str().unwrap(), "--z-max", "6"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("overall"));
    assert!(matches!(code(&o), 0 | 2));

    let c = dir.path().join("c");
    let o = opo(&["simulate", "--manifest", a.join("manifest.json").to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(a.join("variance.csv")).unwrap(), std::fs::read(c.join("variance.csv")).unwrap());
}

#[test]
fn sharded_simulation_finalizes_after_all_shards() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("sharded");
    let whole = dir.path().join("whole");
    assert_eq!(code(&small_run(&s, "5", &["--shard", "0/2"])), 0);
    assert!(!s.join("manifest.json").exists());
    assert_eq!(code(&small_run(&s, "5", &["--shard", "1/2"])), 0);
    assert_eq!(code(&small_run(&s, "5", &[])), 0);
    assert_eq!(code(&small_run(&whole, "5", &["--no-checkpoint"])), 0);
    for f in ["variance.csv", "spectrum_phi90.csv"] {
        assert_eq!(std::fs::read(s.join(f)).unwrap(), std::fs::read(whole.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        r#"
[model]
sigma = 2.0
kappa = 1.0
g = 0.001

[integrator]
dt = 0.003
tau_end = 9.0
system = "adiabatic"

[ensemble]
trajectories = 16
master_seed = 0

[detection]
mode = "rotating"
stationary_cutoff = 3.0
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = opo(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()]);
    // stationary_cutoff belongs to [ensemble]; unknown keys are rejected
    assert_eq!(code(&o), 2);
    std::fs::write(&cfg, std::fs::read_to_string(&cfg).unwrap().replace("stationary_cutoff = 3.0", "").replace("master_seed = 0", "master_seed = 0\nstationary_cutoff = 3.0")).unwrap();
    let o = opo(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["ensemble"]["master_seed"], 3);
    assert_eq!(m["params"]["sigma"], 2.0);
}
