//! End-to-end tests of the experiment runner binary.

use std::path::Path;
use std::process::Command;

fn fraclab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraclab"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL_RUN: &str = r#"{
  "domain": "square",
  "params": { "s": 0.4, "p": 2.0, "n": 2 },
  "resolutions": ["1/16"],
  "diagnostics": ["mazya", "quasi", "hardy"],
  "compact_family": { "kind": "whitney_unions", "generations": [3, 4] },
  "probe_family": { "kind": "ramps", "deltas": [0.25, 0.125] },
  "trends": [ { "check": "mazya_ratios_increasing", "min_growth": 1.0 } ]
}"#;

#[test]
fn run_writes_reports_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "cfg.json", SMALL_RUN);
    let out = tmp.path().join("out");
    let status = fraclab()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for name in [
        "domain_1_16.json",
        "whitney_1_16.json",
        "report_mazya_1_16.json",
        "report_quasi_1_16.json",
        "report_hardy_1_16.json",
        "summary.csv",
        "outcome.json",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let outcome: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("outcome.json")).unwrap()).unwrap();
    assert_eq!(outcome["invariant_violations"].as_array().unwrap().len(), 0);
    assert_eq!(outcome["trend_flags"].as_array().unwrap().len(), 0);
    // Reports embed the config hash and code version.
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("report_mazya_1_16.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert!(report["code_version"].is_string());
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "cfg.json", SMALL_RUN);
    let out1 = tmp.path().join("a");
    let out2 = tmp.path().join("b");
    for out in [&out1, &out2] {
        let status = fraclab()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .args(["--seed", "42"])
            .status()
            .unwrap();
        assert!(status.success());
    }
    for entry in std::fs::read_dir(&out1).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(out1.join(&name)).unwrap();
        let b = std::fs::read(out2.join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between identical runs");
    }
}

#[test]
fn failing_trend_is_soft_exit_two() {
    // Ramp energies increase along this delta order, so the decreasing
    // expectation cannot hold; the run must still complete.
    let text = r#"{
      "domain": "square",
      "params": { "s": 0.4, "p": 2.0, "n": 2 },
      "resolutions": ["1/16"],
      "diagnostics": ["mazya"],
      "probe_family": { "kind": "ramps", "deltas": [0.5, 0.25] },
      "trends": [ { "check": "energies_decreasing" } ]
    }"#;
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "cfg.json", text);
    let out = tmp.path().join("out");
    let status = fraclab()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let outcome: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("outcome.json")).unwrap()).unwrap();
    assert!(!outcome["trend_flags"].as_array().unwrap().is_empty());
}

#[test]
fn inadmissible_resolution_fails_fast_with_minimum() {
    let text = r#"{
      "domain": { "koch": { "level": 4 } },
      "params": { "s": 0.5, "p": 2.0, "n": 2 },
      "resolutions": ["1/32"],
      "diagnostics": ["mazya"]
    }"#;
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "cfg.json", text);
    let output = fraclab()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("1/128"), "error must name the minimal step: {stderr}");
}

#[test]
fn study_emits_table_with_consistency_rows() {
    let text = r#"{
      "domain": "square",
      "params": { "s": 0.45, "p": 2.0, "n": 2 },
      "resolutions": ["1/8", "1/16", "1/32"],
      "diagnostics": ["mazya"]
    }"#;
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "cfg.json", text);
    let out = tmp.path().join("out");
    let status = fraclab()
        .args(["study", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("study.json")).unwrap()).unwrap();
    assert_eq!(table["completed_levels"], 3);
    assert!(table["scaling_rel_err"].as_f64().unwrap() <= 1e-10);
    assert!(table["oracle_rel_err"].as_f64().unwrap() <= 1e-12);
    assert!(out.join("study.csv").exists());
    // Capacity of the fixed central set settles down under refinement.
    let rows = table["rows"].as_array().unwrap();
    let caps: Vec<f64> = rows
        .iter()
        .filter(|r| r["quantity"] == "capacity_center_set")
        .filter_map(|r| r["rel_change"].as_f64())
        .collect();
    assert_eq!(caps.len(), 2);
    assert!(caps[1] < caps[0], "successive relative changes should shrink: {caps:?}");
}

#[test]
fn domain_whitney_energy_capacity_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "cfg.json", SMALL_RUN);
    for (cmd, artifact) in [
        ("domain", "domain_1_16.json"),
        ("whitney", "whitney_1_16.json"),
        ("energy", "energies_1_16.json"),
        ("capacity", "capacity_1_16.json"),
    ] {
        let out = tmp.path().join(cmd);
        let status = fraclab()
            .args([cmd, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "{cmd} failed");
        assert!(out.join(artifact).exists(), "{cmd}: missing {artifact}");
    }
}

#[test]
fn report_subcommand_runs_single_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "cfg.json", SMALL_RUN);
    let out = tmp.path().join("out");
    let status = fraclab()
        .args(["report", "zeroext", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("report_zeroext_1_16.json").exists());
    assert!(!out.join("report_mazya_1_16.json").exists());
}
