use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
profile = "fast"
output = "unused"

[grid]
L = 24.0
Nx = 64
dt = 0.05

[pulse]
shape = "trapezoid"
wavelength_nm = 248.0
intensity_w_cm2 = 6e14
n_cycles = 3

[trajectories]
N = 300
seed = 5
store_decimation = 4

[phase]
bins = 64
sigma_h = 0.15
window_cycles = 1
pooling_mode = "time_average"

[tdqmc]
enabled = false
N = 40
seed = 9

[scan]
intensities = [4e14, 7e14]
chirp_signs = [0]
"#;

fn nsdi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsdi")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();

    assert_eq!(code(&nsdi(&["run", "--out", out])), 2);

    let bad = write_config(dir.path(), &CONFIG.replace("6e14", "-1.0"));
    let res = nsdi(&["run", "--config", &bad, "--out", out]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("validation error"));

    let unknown = write_config(dir.path(), &CONFIG.replace("seed = 5", "seed = 5\nwalkers = 3"));
    assert_eq!(code(&nsdi(&["run", "--config", &unknown, "--out", out])), 2);

    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&nsdi(&["run", "--config", missing.to_str().unwrap()])), 2);

    let single_point = write_config(dir.path(), &CONFIG.replace("[4e14, 7e14]", "[4e14]"));
    assert_eq!(code(&nsdi(&["scan", "--config", &single_point, "--out", out])), 2);

    assert_eq!(code(&nsdi(&["report", "--out", dir.path().join("empty").to_str().unwrap()])), 2);
    assert_ne!(code(&nsdi(&["run", "--profile", "medium"])), 0);
}

#[test]
fn relax_and_run_produce_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();

    let relax = nsdi(&["relax", "--config", &cfg, "--out", out_s]);
    assert_eq!(code(&relax), 0, "{}", String::from_utf8_lossy(&relax.stderr));
    assert!(out.join("ground_state.wf").is_file());
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("relax.json")).unwrap()).unwrap();
    assert!((summary["energy"].as_f64().unwrap() + 2.238).abs() < 0.05);

    let run = nsdi(&["run", "--config", &cfg, "--out", out_s, "--workers", "2"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("DI "));
    for f in ["manifest.json", "observables.json", "trajectories.csv", "phase_summary.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let obs: serde_json::Value = serde_json::from_slice(&fs::read(out.join("observables.json")).unwrap()).unwrap();
    assert_eq!(obs["intensity_w_cm2"].as_f64(), Some(6e14));
    assert!(obs["di_yield"].as_f64().unwrap() > 0.0);
}

#[test]
fn scan_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("scan");
    let out_s = out.to_str().unwrap();
    let scan = nsdi(&["scan", "--config", &cfg, "--out", out_s]);
    assert_eq!(code(&scan), 0, "{}", String::from_utf8_lossy(&scan.stderr));
    let table = fs::read_to_string(out.join("scan.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let report = nsdi(&["report", "--out", out_s]);
    assert_eq!(code(&report), 0, "{}", String::from_utf8_lossy(&report.stderr));
    assert!(out.join("report.md").is_file());
}
