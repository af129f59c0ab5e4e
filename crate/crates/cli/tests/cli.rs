use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qpermute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpermute"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn n2_config(spacing: f64, delay: f64) -> String {
    format!(
        r#"{{"n": 2, "m": 2, "operators": "haar", "input_polarization": [[1, 0], [0, 0]],
            "control_amplitudes": "uniform-permutations",
            "timing": {{"bin_spacing_ps": {spacing}, "loop_delay_ps": {delay}}}, "seed": 3}}"#
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn feasible_schedule_is_written() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "dev.json", &n2_config(40.0, 200.0));
    let o = qpermute(&["schedule", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("S[0,0]"));
    let sched = std::fs::read_to_string(dir.path().join("dev.schedule.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&sched).unwrap();
    assert!(!v["timeline"].as_array().unwrap().is_empty());
}

#[test]
fn narrow_bin_spacing_names_the_constraint() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "dev.json", &n2_config(12.0, 200.0));
    let o = qpermute(&["schedule", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("binSpacing ≥ switchWindow + transition"), "{}", stderr(&o));
}

#[test]
fn short_loop_delay_names_the_constraint() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "dev.json", &n2_config(40.0, 100.0));
    let o = qpermute(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("loopDelay ≥ N^M · binSpacing"), "{err}");
    assert!(err.contains("160"), "{err}");
}

#[test]
fn simulate_uniform_n4_covers_24_bins() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "n4.json",
        r#"{"n": 4, "operators": "haar", "input_polarization": [[0.6, 0], [0, 0.8]],
            "control_amplitudes": "uniform-permutations",
            "timing": {"bin_spacing_ps": 20, "loop_delay_ps": 5120}, "seed": 9}"#,
    );
    let out = dir.path().join("r.json");
    let o = qpermute(&["simulate", "--config", s(&cfg), "--out", s(&out), "--format", "machine"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["m"], 4);
    assert_eq!(report["occupied_bins"].as_array().unwrap().len(), 24);
    assert!((report["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let printed: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(printed, report);
}

#[test]
fn simulate_reuses_a_saved_schedule() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "dev.json", &n2_config(40.0, 200.0));
    let sched = dir.path().join("s.json");
    assert!(qpermute(&["schedule", "--config", s(&cfg), "--out", s(&sched)]).status.success());
    let o = qpermute(&["simulate", "--config", s(&cfg), "--schedule", s(&sched)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let fid: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("fidelity "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((fid - 1.0).abs() < 1e-9);
    assert!(dir.path().join("dev.report.json").exists());
}

#[test]
fn tampered_schedule_is_internal_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "dev.json", &n2_config(40.0, 200.0));
    let sched = dir.path().join("s.json");
    assert!(qpermute(&["schedule", "--config", s(&cfg), "--out", s(&sched)]).status.success());
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sched).unwrap()).unwrap();
    for e in doc["logical"].as_array_mut().unwrap() {
        if e["switch"] == "S[0,0]" {
            e["on"] = serde_json::Value::Bool(!e["on"].as_bool().unwrap());
        }
    }
    std::fs::write(&sched, doc.to_string()).unwrap();
    let o = qpermute(&["simulate", "--config", s(&cfg), "--schedule", s(&sched)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn verify_small_passes() {
    let o = qpermute(&["verify", "--n", "2", "--m", "2", "--trials", "10", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("[PASS] device-vs-oracle"));
    assert!(!text.contains("[FAIL]"));
}

#[test]
fn verify_refuses_huge_registers() {
    let o = qpermute(&["verify", "--n", "16", "--m", "16"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("budget"));
}

#[test]
fn drift_sweep_prints_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "dev.json", &n2_config(40.0, 200.0));
    let o = qpermute(&["drift-sweep", "--config", s(&cfg), "--sigmas", "0,0.05", "--trials", "8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "sigma,mean_fidelity,std_fidelity,trials");
    let row: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(row[0], 0.0);
    assert!((row[1] - 1.0).abs() < 1e-9);
    assert_eq!(row[3], 8.0);
    assert_eq!(lines.len(), 3);
}

#[test]
fn compare_literal_reports_disagreements() {
    let o = qpermute(&["schedule", "--compare-literal", "--n", "8", "--m", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("N=8 S[2,2] l=5: printed off derived on"));
}

#[test]
fn malformed_config_is_user_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.json", "{\"n\": 2,\n\"operators\": [");
    let o = qpermute(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"));
}
