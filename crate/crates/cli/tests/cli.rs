use std::path::Path;
use std::process::{Command, Output};

use gaussian_lhv::certify::classify_point;
use gaussian_lhv::sweep::SweepConfig;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussian-lhv")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn certify_present_and_absent() {
    let present = json(&run(&["certify", "--eta", "0.1", "--nu", "1.05", "--epsilon", "0.02"]));
    assert_eq!(present["verdict"], "present");
    assert!(present["certificate"]["margin"].as_f64().unwrap() >= 0.0);

    let absent = run(&["certify", "--eta", "0.95", "--nu", "1.4"]);
    assert_eq!(absent.status.code(), Some(0));
    let absent = json(&absent);
    assert_eq!(absent["verdict"], "absent");
    assert!(absent["certificate"].is_null());
}

#[test]
fn chsh_optimization_reports_violation() {
    let out = json(&run(&["chsh", "--eta", "0.95", "--nu", "1.4", "--epsilon", "0.02", "--optimize"]));
    let s = out["s"].as_f64().unwrap();
    assert!((s - 2.1).abs() < 0.05, "{s}");
    assert_eq!(out["optimized"], true);
}

#[test]
fn chsh_fixed_settings_csv() {
    let out = run(&["chsh", "--eta", "0.95", "--nu", "1.4", "--alpha=0.12,-0.48", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,a,b,probability"));
    let total: f64 = lines.map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 4.0).abs() < 1e-9);
}

#[test]
fn sample_matches_born_rule() {
    let out = json(&run(&[
        "sample", "--eta", "0.1", "--nu", "1.05", "--epsilon", "0.02", "--samples", "1000000", "--seed", "7",
    ]));
    assert!(out["report"]["max_abs_z"].as_f64().unwrap() <= 5.0);
    assert!(out["quantum_s"].as_f64().unwrap() <= 2.0 + 1e-6);
}

#[test]
fn sample_refuses_uncertified_point() {
    let out = run(&["sample", "--eta", "0.95", "--nu", "1.4", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no locality certificate"));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["certify", "--nu", "1.1"],
        vec!["certify", "--eta", "abc", "--nu", "1.1"],
        vec!["certify", "--eta", "1.5", "--nu", "1.1"],
        vec!["sweep", "--grid", "1x4"],
        vec!["sweep", "--grid", "four"],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn malformed_config_names_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"eta_steps\": 3,\n  \"eta_stepz\": 4\n}\n").unwrap();
    let out = run(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("eta_stepz") && err.contains("line 3"), "{err}");
}

fn write_config(dir: &Path, out: &Path) -> std::path::PathBuf {
    let path = dir.join("sweep.json");
    let cfg = serde_json::json!({
        "eta_min": 0.0, "eta_max": 1.0, "eta_steps": 9,
        "nu_min": 1.0, "nu_max": 1.5, "nu_steps": 50,
        "epsilon": 0.02,
        "output_path": out,
    });
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn sweep_is_deterministic_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let cfg = write_config(dir.path(), &first);
    let cfg = cfg.to_str().unwrap();
    assert!(run(&["sweep", "--config", cfg, "--grid", "4x3"]).status.success());
    let second = dir.path().join("second.csv");
    assert!(run(&["sweep", "--config", cfg, "--grid", "4x3", "--out", second.to_str().unwrap()]).status.success());
    let a = std::fs::read(&first).unwrap();
    assert_eq!(a, std::fs::read(&second).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("eta,nu,status,value"));
    assert_eq!(text.lines().count(), 1 + 4 * 3);
}

#[test]
fn sweep_cells_match_single_point_classification() {
    let out = run(&["sweep", "--grid", "2x2", "--format", "json"]);
    let cells = json(&out);
    let opts = SweepConfig::default().optimizer();
    let cells = cells.as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for cell in cells {
        let (eta, nu) = (cell["eta"].as_f64().unwrap(), cell["nu"].as_f64().unwrap());
        let single = classify_point(eta, nu, 0.02, &opts).unwrap();
        assert_eq!(cell["status"], single.status.as_str());
        assert_eq!(cell["value"].as_f64().unwrap(), single.value);
    }
}

#[test]
fn full_noise_certifies_whole_grid() {
    let out = run(&["sweep", "--grid", "6x6", "--epsilon", "0.25"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2) == Some("lhv_certified")));
}

#[test]
fn unwritable_output_reports_path() {
    let out = run(&["sweep", "--grid", "2x2", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent-dir/x.csv"));
}
