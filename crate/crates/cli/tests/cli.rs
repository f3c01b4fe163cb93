use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pentatrope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pentatrope")).args(args).output().expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn jsonl(file: &str) -> Vec<Value> {
    fs::read_to_string(file).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn exact_automaton_orbit_from_init_file() {
    let dir = tempfile::tempdir().unwrap();
    let init = path(dir.path(), "init.json");
    let out = path(dir.path(), "orbit.jsonl");
    fs::write(&init, r#"{"x": [3, -1, 2, 0, -4], "y": [1, 2, -3, 0, 5]}"#).unwrap();
    let o = pentatrope(&["orbit", "--map", "phi", "--steps", "1", "--init", &init, "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = jsonl(&out);
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["step"], 1);
    assert_eq!(lines[1]["x"], serde_json::json!([3, 3, 3, -1, -8]));
    assert_eq!(lines[1]["y"], serde_json::json!([-2, -4, 1, 9, 1]));
}

#[test]
fn csv_orbit_has_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "orbit.csv");
    let o = pentatrope(&["orbit", "--map", "F", "--n", "6", "--steps", "4", "--seed", "3", "--out", &out, "--format", "csv"]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("step,z_0,"));
    assert_eq!(rows[0].split(',').count(), 13);
    assert!(rows[5].starts_with("4,"));
}

#[test]
fn same_seed_same_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.jsonl"), path(dir.path(), "b.jsonl"));
    for out in [&a, &b] {
        assert!(pentatrope(&["orbit", "--map", "phi_t", "--t", "2", "--n", "7", "--steps", "5", "--seed", "11", "--out", out]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn invariants_of_a_t_orbit_do_not_drift() {
    let dir = tempfile::tempdir().unwrap();
    let orbit = path(dir.path(), "t.jsonl");
    let csv_out = path(dir.path(), "inv.csv");
    assert!(pentatrope(&["orbit", "--map", "T", "--n", "6", "--steps", "5", "--seed", "1", "--out", &orbit]).status.success());
    let o = pentatrope(&["invariants", "--orbit", &orbit, "--out", &csv_out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv_out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,name,value,drift"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // O_1..O_3, O_6, E_1..E_3, E_6 at 6 steps
    assert_eq!(rows.len(), 8 * 6);
    assert!(rows.iter().any(|r| r[1] == "E_6"));
    for r in rows {
        assert!(r[3].parse::<f64>().unwrap() <= 1e-8, "{r:?}");
    }
}

#[test]
fn invariants_of_an_f_orbit_need_the_map() {
    let dir = tempfile::tempdir().unwrap();
    let orbit = path(dir.path(), "f.jsonl");
    let csv_out = path(dir.path(), "inv.csv");
    assert!(pentatrope(&["orbit", "--map", "F", "--n", "5", "--steps", "4", "--seed", "2", "--out", &orbit]).status.success());
    assert!(pentatrope(&["invariants", "--orbit", &orbit, "--map", "f", "--out", &csv_out]).status.success());
    let text = fs::read_to_string(&csv_out).unwrap();
    let worst = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(worst <= 1e-8);
}

#[test]
fn tropical_invariants_of_an_exact_orbit_are_constant() {
    let dir = tempfile::tempdir().unwrap();
    let orbit = path(dir.path(), "phi.jsonl");
    assert!(pentatrope(&["orbit", "--map", "phi", "--n", "7", "--steps", "30", "--seed", "5", "--out", &orbit]).status.success());
    let o = pentatrope(&["invariants", "--orbit", &orbit]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for line in text.lines().skip(1).filter(|l| !l.contains("(+1)") && !l.contains("(-1)")) {
        assert!(line.ends_with(",0.0"), "{line}");
    }
}

#[test]
fn polygon_vertices_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "poly.json");
    let out = path(dir.path(), "poly.csv");
    let vertices: Vec<[f64; 3]> = (0..5)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / 5.0;
            [a.cos(), a.sin(), 1.0]
        })
        .collect();
    let body = serde_json::json!({ "n": 5, "monodromy": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "vertices": vertices });
    fs::write(&file, body.to_string()).unwrap();
    let o = pentatrope(&["polygon", "--in", &file, "--steps", "2", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["step", "i", "x", "y"]);
    let rows: Vec<(usize, usize, f64, f64)> = reader.deserialize().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 15);
    // the regular pentagon shrinks by cos(2π/5)/cos(4π/5) in radius and turns
    let r = |row: &(usize, usize, f64, f64)| row.2.hypot(row.3);
    let ratio = (std::f64::consts::TAU / 5.0).cos() / (2.0 * std::f64::consts::TAU / 5.0).cos();
    assert!((r(&rows[5]) - ratio.abs()).abs() < 1e-12);
    assert!((r(&rows[10]) - ratio * ratio).abs() < 1e-12);
}

#[test]
fn verify_writes_reports_and_signals_success() {
    let dir = tempfile::tempdir().unwrap();
    let report = path(dir.path(), "report.json");
    let o = pentatrope(&["verify", "prop33", "--seed", "4", "--report", &report]);
    assert!(o.status.success());
    let reports: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let r = &reports[0];
    assert_eq!(r["name"], "prop33");
    assert_eq!(r["seed"], 4);
    assert_eq!(r["pass"], true);
    assert_eq!(r["parameters"]["l_max"], 12);
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS prop33"));
}

#[test]
fn verify_fails_with_a_wrong_configured_convention() {
    let dir = tempfile::tempdir().unwrap();
    let config = path(dir.path(), "config.json");
    let report = path(dir.path(), "report.json");
    fs::write(&config, r#"{"sign_convention": {"o_signed": true, "e_signed": true, "e_factor": "same_index"}}"#).unwrap();
    let o = pentatrope(&["--config", &config, "verify", "conservation", "--n", "5", "--report", &report]);
    assert_eq!(o.status.code(), Some(1));
    let reports: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(reports[0]["pass"], false);
}

#[test]
fn tightened_tolerance_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let config = path(dir.path(), "config.json");
    let report = path(dir.path(), "report.json");
    fs::write(&config, r#"{"tolerances": {"conjugacy_rel": 0.0}}"#).unwrap();
    let o = pentatrope(&["--config", &config, "verify", "conjugacy", "--report", &report]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "o.jsonl");
    let o = pentatrope(&["orbit", "--map", "phi", "--steps", "3", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--n is required"));
    assert!(!pentatrope(&["orbit", "--map", "G", "--n", "5", "--steps", "1", "--out", &out]).status.success());
    let report = path(dir.path(), "r.json");
    assert!(!pentatrope(&["verify", "thm23", "--n", "4", "--report", &report]).status.success());
}

#[test]
fn singular_t_orbit_keeps_the_computed_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let init = path(dir.path(), "init.json");
    let out = path(dir.path(), "orbit.jsonl");
    // z_1 w_1 = 1 makes the first step singular
    fs::write(&init, r#"{"z": [0.5, 2, 0.3, 0.4, 0.6], "w": [0.7, 0.5, 0.2, 0.9, 0.8]}"#).unwrap();
    let o = pentatrope(&["orbit", "--map", "T", "--steps", "3", "--init", &init, "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("singular"));
    assert_eq!(jsonl(&out).len(), 1);
}
