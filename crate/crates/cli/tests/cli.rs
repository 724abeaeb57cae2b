use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bkflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bkflow")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, Value) {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = bkflow(&args);
    let code = o.status.code().unwrap();
    let report = std::fs::read_to_string(out.join(format!("{command}.json")))
        .map(|s| serde_json::from_str(&s).unwrap())
        .unwrap_or(Value::Null);
    (code, report)
}

#[test]
fn verify_bk_on_zero_potential_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.json",
        &json!({"model": {"kind": "potential", "sites": [], "values": []}, "params": {"lambda": 0.5, "l": 400}}),
    );
    let (code, report) = run("verify-bk", &cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert_eq!(report["verdict"], json!({"status": "pass"}));
    assert_eq!(report["data"]["defect_mod1"], json!(0.0));
    assert_eq!(report["version"]["schema"], json!(1));
    assert_eq!(report["config"]["command"], json!("verify-bk"));
}

#[test]
fn verify_e1_without_crossing_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("verify-e1-none.json");
    let (code, report) = run("verify-e1", &cfg, dir.path(), &["--override", "params.l_sweep=[100,200]"]);
    assert_eq!(code, 0, "{report}");
    let r = &report["data"]["report"];
    assert_eq!(r["delta_xi"], json!(0));
    assert_eq!(r["flow"]["flow"], json!(0));
    let csv = std::fs::read_to_string(dir.path().join("verify-e1.csv")).unwrap();
    assert!(csv.starts_with("lambda,l,delta,plus,minus,value\n"));
}

#[test]
fn gap_control_through_verify_e1() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run(
        "verify-e1",
        &configs().join("verify-e1-gap.json"),
        dir.path(),
        &["--override", "params.l_sweep=[40,80]"],
    );
    assert_eq!(code, 0, "{report}");
    assert_eq!(report["data"]["mode"], json!("gap"));
    assert_eq!(report["data"]["report"]["delta_xi"], json!(-1));
}

#[test]
fn lambda_outside_band_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bkflow(&[
        "verify-bk",
        "--config",
        configs().join("verify-bk.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "params.lambda=3",
    ]);
    assert_eq!(o.status.code(), Some(64));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("λ outside open band (−2,2)"), "{err}");
    assert!(!dir.path().join("verify-bk.json").exists());
}

#[test]
fn malformed_and_unknown_fields_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"model\": {\"kind\": \"potential\",\n  ").unwrap();
    let o = bkflow(&["index", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8(o.stderr).unwrap().contains("line"));

    let cfg = configs().join("verify-bk.json");
    let (code, _) = run("verify-bk", &cfg, dir.path(), &["--override", "params.lamda=0.4"]);
    assert_eq!(code, 64);
    let (code, _) = run("verify-thm0", &cfg, dir.path(), &[]);
    assert_eq!(code, 64, "command mismatch");
    let o = bkflow(&["nonsense", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn contract_failure_exits_one() {
    // A small box is far from the essential-spectrum limit.
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run(
        "verify-thm0",
        &configs().join("verify-thm0.json"),
        dir.path(),
        &["--override", "params.l_sweep=[60]"],
    );
    assert_eq!(code, 1);
    assert_eq!(report["verdict"], json!({"status": "fail"}));
    let csv = std::fs::read_to_string(dir.path().join("verify-thm0.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 121);
}

#[test]
fn numerical_rejection_is_indeterminate() {
    // λ = 1.62 sits next to -1 ∈ σ(S) for this potential.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "near.json",
        &json!({"model": {"kind": "potential", "sites": [0, 4], "values": [2.0, 2.0]},
                "params": {"lambda": 1.62, "l_sweep": [60]}}),
    );
    let (code, report) = run("index", &cfg, dir.path(), &[]);
    assert_eq!(code, 2);
    assert_eq!(report["verdict"]["status"], json!("indeterminate"));
    assert!(report["data"]["error"].as_str().unwrap().contains("non-Fredholm"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("scatter.json");
    for out in [a.path(), b.path()] {
        let (code, _) = run("scatter", &cfg, out, &["--override", "params.points=40"]);
        assert_eq!(code, 0);
    }
    for f in ["scatter.json", "scatter.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn seed_flag_selects_random_potential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("scatter.json");
    let (_, r1) = run("scatter", &cfg, dir.path(), &["--override", "params.points=5", "--seed", "1"]);
    let (_, r2) = run("scatter", &cfg, dir.path(), &["--override", "params.points=5", "--seed", "2"]);
    assert_eq!(r1["config"]["seed"], json!(1));
    assert_ne!(r1["data"]["potential"], r2["data"]["potential"]);
}

#[test]
fn matrix_index_and_ssf() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run("index", &configs().join("index.json"), dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(report["data"]["probes"].as_array().unwrap().len() >= 45);
    let (code, report) = run("ssf", &configs().join("ssf.json"), dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(report["data"]["max_residual"].as_f64().unwrap() < 1e-6);
}

#[test]
fn flow_reports_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run("flow", &configs().join("flow.json"), dir.path(), &[]);
    assert_eq!(code, 0);
    assert_eq!(report["data"]["flow"]["flow"], json!(-1));
    let csv = std::fs::read_to_string(dir.path().join("flow.csv")).unwrap();
    assert!(csv.starts_with("lambda,phase_1,phase_2\n"));
}
