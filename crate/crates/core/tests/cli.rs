use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dham(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dham"))
        .args(args)
        .output()
        .expect("dham runs")
}

fn config(name: &str) -> String {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    root.join(name).to_string_lossy().into_owned()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn transform_both_directions() {
    let v = stdout_json(&dham(&["--config", &config("example1.json"), "transform"]));
    assert_eq!(v["H"], "p*pm + q*qm");
    assert_eq!(v["alphas"], serde_json::json!([1.0, 0.0, 0.0, 1.0]));
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "h.json", r#"{"hamiltonian": {"H": "(p + pm)^2/2 + (q + qm)^2/2", "alphas": [1, 1, 1, 1]}}"#);
    let v = stdout_json(&dham(&["transform", "--model", m.to_str().unwrap()]));
    assert_eq!(v["lagrangian"]["alpha"], 1.0);
    assert_eq!(v["lagrangian"]["phi"], "(q + qm)^2/2");
}

#[test]
fn simulate_is_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let o = dham(&["--config", &config("example1.json"), "simulate", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let first = std::fs::read(&out).unwrap();
    let o = dham(&["--config", &config("example1.json"), "simulate", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(first, std::fs::read(&out).unwrap());
    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,q,p,qdot,pdot,Rp,Rq,Rt"));
    // 64 steps per delay over [-2, 4].
    assert_eq!(lines.count(), 6 * 64 + 1);
}

#[test]
fn noether_report_lists_integrals() {
    let dir = tempfile::tempdir().unwrap();
    let o = dham(&["--config", &config("example1.json"), "--out", dir.path().to_str().unwrap(), "noether"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("noether.json")).unwrap()).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 5);
    let classes: Vec<&str> = reports.iter().map(|r| r["classification"].as_str().unwrap()).collect();
    assert_eq!(classes, ["Divergence", "Divergence", "Variational", "None", "Divergence"]);
    for r in reports {
        assert_eq!(r["identity_ok"], true);
    }
    assert!(reports[0]["I"].is_string());
    assert!(reports[0]["drift"]["I"]["max"].as_f64().unwrap() < 1e-5);
    assert!(reports[3]["I"].is_null());
}

#[test]
fn recurse_and_compare() {
    let o = dham(&["--config", &config("example2.json"), "recurse"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("t,q,p,qdot,pdot,Rp,Rq,Rt\n"));
    let v = stdout_json(&dham(&["--config", &config("example1.json"), "compare", "--n", "32,64"]));
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs[1]["q"]["max"].as_f64().unwrap() < 1e-6);
    assert!(v["convergence"][1]["order"].as_f64().unwrap() > 3.0);
}

#[test]
fn identity_suites() {
    let v = stdout_json(&dham(&["check-identity"]));
    assert_eq!(v["passed"], true);
    let v = stdout_json(&dham(&["--config", &config("classical.json"), "check-identity", "--classical"]));
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
    let o = dham(&["--tol", "1e-300", "--seed", "3", "check-identity"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"lagrangian": {"alpha": 0, "beta": 1, "gamma": "x"}}"#);
    let o = dham(&["--config", bad.to_str().unwrap(), "transform"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/lagrangian/gamma"));
    let expr = write(dir.path(), "expr.json", r#"{"lagrangian": {"alpha": 0, "beta": 1, "gamma": 0, "phi": "q*"}}"#);
    let o = dham(&["--config", expr.to_str().unwrap(), "transform"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/lagrangian/phi"));
    let singular = write(
        dir.path(),
        "singular.json",
        r#"{"hamiltonian": {"H": "p*pm + q*qm", "alphas": [0, 0, 1, 0]},
            "history": {"q": "sin(t)", "p": "cos(t)"}, "tau": 1, "horizon": 2}"#,
    );
    let o = dham(&["--config", singular.to_str().unwrap(), "simulate"]);
    assert_eq!(o.status.code(), Some(3));
    let o = dham(&["--config", &config("example1.json"), "simulate", "--horizon", "2.5"]);
    assert_eq!(o.status.code(), Some(2));
}
