use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn medchain(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medchain"))
        .current_dir(dir)
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

/// A config with a short run so each invocation stays quick.
fn short_config(dir: &Path) -> String {
    let path = dir.join("short.toml");
    fs::write(&path, "seed = 11\n[run]\nduration = 60000\n").unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn help_exits_zero_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let o = medchain(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["init", "run", "bench", "inject-fault", "query", "verify", "export"] {
        let o = medchain(dir.path(), &[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(medchain(dir.path(), &[]).status.code(), Some(2));
    assert_eq!(medchain(dir.path(), &["frobnicate"]).status.code(), Some(2));
    let o = medchain(
        dir.path(),
        &["inject-fault", "--device", "device-1", "--kind", "melt:3", "--onset", "0"],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = medchain(
        dir.path(),
        &["inject-fault", "--device", "device-9", "--kind", "stuck-at:0", "--onset", "0"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("device-9"));
}

#[test]
fn init_writes_a_loadable_config_and_refuses_to_clobber() {
    let dir = tempfile::tempdir().unwrap();
    let o = medchain(dir.path(), &["init", "--out", "m.toml"]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("m.toml")).unwrap();
    assert!(text.contains("[ledger]") && text.contains("[bench]"));
    assert_eq!(medchain(dir.path(), &["init", "--out", "m.toml"]).status.code(), Some(2));
    assert_eq!(
        medchain(dir.path(), &["init", "--out", "m.toml", "--force"]).status.code(),
        Some(0)
    );
    let o = medchain(dir.path(), &["--config", "m.toml", "run", "--duration", "5000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn config_problems_exit_three_and_missing_files_four() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "sede = 3\n").unwrap();
    let o = medchain(dir.path(), &["--config", "bad.toml", "run"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error:"));
    fs::write(dir.path().join("zero.toml"), "[devices]\ncount = 0\n").unwrap();
    assert_eq!(medchain(dir.path(), &["--config", "zero.toml", "run"]).status.code(), Some(3));
    assert_eq!(medchain(dir.path(), &["--config", "nope.toml", "run"]).status.code(), Some(4));
    assert_eq!(medchain(dir.path(), &["verify", "--chain", "nope.hex"]).status.code(), Some(4));
}

#[test]
fn run_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let a = medchain(dir.path(), &["--config", &cfg, "run", "--trace", "t1.jsonl"]);
    let b = medchain(dir.path(), &["--config", &cfg, "run", "--trace", "t2.jsonl"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        fs::read(dir.path().join("t1.jsonl")).unwrap(),
        fs::read(dir.path().join("t2.jsonl")).unwrap()
    );
    let summary: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["flagged"].as_array().unwrap().len(), 0);
    let c = medchain(dir.path(), &["--config", &cfg, "--seed", "12", "run"]);
    let other: serde_json::Value = serde_json::from_slice(&c.stdout).unwrap();
    assert_ne!(summary["state_root"], other["state_root"]);
}

#[test]
fn inject_fault_reports_the_faulted_device() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let o = medchain(
        dir.path(),
        &["--config", &cfg, "inject-fault", "--device", "device-3", "--kind", "stuck-at:0", "--onset", "10000"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "flagged: device-3\n");
    let o = medchain(
        dir.path(),
        &["--config", &cfg, "inject-fault", "--device", "device-2", "--kind", "noise-burst:1", "--onset", "0"],
    );
    assert_eq!(stdout(&o), "flagged: none\n");
}

#[test]
fn query_applies_access_control() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let o = medchain(dir.path(), &["--config", &cfg, "query", "--as", "doctor-1", "--record", "patient-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rec: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rec["patient_id"], "patient-1");

    let o = medchain(dir.path(), &["--config", &cfg, "query", "--as", "doctor-1", "--record", "patient-2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = medchain(dir.path(), &["--config", &cfg, "query", "--as", "hospital-1", "--record", "patient-9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = medchain(
        dir.path(),
        &["--config", &cfg, "query", "--as", "patient-2", "--record", "patient-2", "--offline", "storage-1"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn export_then_verify_and_detect_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let o = medchain(dir.path(), &["--config", &cfg, "export", "--out-dir", "ex", "--trace"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ex = dir.path().join("ex");
    for f in [
        "chain.hex",
        "telemetry.csv",
        "device_traces.csv",
        "flags.jsonl",
        "trace.jsonl",
        "summary.json",
        "config.toml",
    ] {
        assert!(ex.join(f).is_file(), "{f}");
    }
    assert!(ex.join("records").is_dir());
    let traces = fs::read_to_string(ex.join("device_traces.csv")).unwrap();
    assert_eq!(traces.lines().next().unwrap(), "timestamp,device_id,vital_kind,value_milli");
    assert_eq!(traces.lines().count(), 1 + 4 * 60);

    let o = medchain(dir.path(), &["--config", &cfg, "verify", "--chain", "ex/chain.hex"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("chain ok"));

    let text = fs::read_to_string(ex.join("chain.hex")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let target = 3;
    let mid = lines[target].len() / 2;
    let old = lines[target].as_bytes()[mid];
    let new = if old == b'0' { '1' } else { '0' };
    lines[target].replace_range(mid..mid + 1, &new.to_string());
    fs::write(ex.join("bad.hex"), lines.join("\n") + "\n").unwrap();
    let o = medchain(dir.path(), &["--config", &cfg, "verify", "--chain", "ex/bad.hex"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(&format!("height {target}")), "{}", stderr(&o));

    // A second export with the same seed is byte-identical.
    medchain(dir.path(), &["--config", &cfg, "export", "--out-dir", "ex2", "--trace"]);
    for f in ["chain.hex", "device_traces.csv", "flags.jsonl", "trace.jsonl", "summary.json"] {
        assert_eq!(fs::read(ex.join(f)).unwrap(), fs::read(dir.path().join("ex2").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn bench_writes_tables_and_reflects_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = medchain(dir.path(), &["bench", "--out-dir", "b", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    for f in ["table4_processing_time.csv", "table5_average_delay.csv", "report.json"] {
        assert!(dir.path().join("b").join(f).is_file(), "{f}");
    }
    assert!(stdout(&o).contains("parity (cv <= 0.15): pass"));

    // Two batch sizes leave the scaling check without enough points.
    let o = medchain(dir.path(), &["bench", "--out-dir", "c", "--trials", "1", "--batch-sizes", "10,20"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("scaling (r2 >= 0.9): not applicable"));
    let o = medchain(dir.path(), &["bench", "--out-dir", "d", "--batch-sizes", "20,10"]);
    assert_eq!(o.status.code(), Some(3));
}
