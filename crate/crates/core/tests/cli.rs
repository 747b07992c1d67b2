use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn pidrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pidrate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_writes_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("trace.csv");
    let cfg = config("worked_p.json");
    let out = pidrate(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_path).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, pidrate::engine::TRACE_COLUMNS.join(","));
    for col in ["t", "U", "k", "r", "attacker_cashflow", "background_cashflow", "reserve_cashflow"] {
        assert!(header.split(',').any(|c| c == col), "missing column {col}");
    }
    assert_eq!(csv.lines().count(), 27);
}

#[test]
fn simulate_json_is_stable() {
    let cfg = config("elastic_mitigated.json");
    let args = ["simulate", "--config", cfg.to_str().unwrap(), "--format", "json"];
    let a = pidrate(&args);
    let b = pidrate(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["blocks"].as_array().unwrap().len(), 40);
}

#[test]
fn attack_build_prints_schedule() {
    let cfg = config("worked_p.json");
    let out = pidrate(&["attack", "build", "--controller", "p", "--duration", "20", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["actions"].as_array().unwrap().len(), 22);
}

#[test]
fn analyze_reports_discrepancies() {
    let cfg = config("pi_reference.json");
    let out = pidrate(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let stab = v["discrepancies"]
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["quantity"] == "stabilization_cost")
        .unwrap();
    assert_eq!(stab["paper"], "1637.5");
    assert_eq!(stab["rederived"], "3737.5");
}

#[test]
fn sweep_and_figures() {
    let cfg = config("worked_p.json");
    let out = pidrate(&["sweep", "--config", cfg.to_str().unwrap(), "--grid", "k=26..29"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 5);

    let out = pidrate(&["figures", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().next().unwrap(), "t,offset,phase,U,delta_S,D,S,k,r");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let missing = dir.path().join("missing.json");
    assert_eq!(pidrate(&["simulate", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(pidrate(&["simulate"]).status.code(), Some(2));

    let mut infeasible: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("worked_p.json")).unwrap()).unwrap();
    infeasible["accounting_mode"] = "pro_rata".into();
    let path = dir.path().join("infeasible.json");
    std::fs::write(&path, infeasible.to_string()).unwrap();
    let out = pidrate(&["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset"));

    let mut bad_gamma = infeasible.clone();
    bad_gamma["accounting_mode"] = "paper_faithful".into();
    bad_gamma["params"]["gamma"] = "1.5".into();
    std::fs::write(&path, bad_gamma.to_string()).unwrap();
    assert_eq!(pidrate(&["simulate", "--config", path.to_str().unwrap()]).status.code(), Some(4));
}
