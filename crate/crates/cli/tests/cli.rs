use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn exotic() -> Command {
    Command::new(env!("CARGO_BIN_EXE_exotic"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn free_model(dir: &Path, rank: usize) -> PathBuf {
    write(dir, &format!("free{rank}.json"), &format!(r#"{{"backend":{{"free":{rank}}},"units":1,"action":[]}}"#))
}

fn run(args: &[&str], model: &Path, config: Option<&Path>, out: Option<&Path>) -> Output {
    let mut cmd = exotic();
    cmd.args(args).arg("--model").arg(model);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn certify_writes_report_and_tables() {
    let tmp = TempDir::new().unwrap();
    let model = free_model(tmp.path(), 2);
    let out = tmp.path().join("out");
    let o = run(&["certify"], &model, None, Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["operation"], "certify");
    assert_eq!(r["verdict"], "Certified");
    assert_eq!(r["model_digest"].as_str().unwrap().len(), 64);
    assert!(out.join("tables/witness.csv").exists());
}

#[test]
fn inconclusive_certificate_exits_one() {
    let tmp = TempDir::new().unwrap();
    let model = free_model(tmp.path(), 2);
    let cfg = write(tmp.path(), "cfg.json", r#"{"alpha": 0.5}"#);
    let o = run(&["certify"], &model, Some(&cfg), Some(&tmp.path().join("out")));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn budget_exceeded_exits_two() {
    let tmp = TempDir::new().unwrap();
    let model = free_model(tmp.path(), 2);
    let o = exotic()
        .args(["growth", "--budget", "10", "--model"])
        .arg(&model)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("enumeration limit"));
}

#[test]
fn usage_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.json", r#"{"backend":{"free":2},"units":2,"action":[[0,0],[0,1]]}"#);
    assert_eq!(run(&["growth"], &bad, None, None).status.code(), Some(2));
    let model = free_model(tmp.path(), 2);
    let cfg = write(tmp.path(), "cfg.json", r#"{"no_such_key": 1}"#);
    assert_eq!(run(&["growth"], &model, Some(&cfg), None).status.code(), Some(2));
    assert_eq!(exotic().arg("growth").output().unwrap().status.code(), Some(2));
}

#[test]
fn subexponential_band_is_reported() {
    let tmp = TempDir::new().unwrap();
    let model = free_model(tmp.path(), 1);
    let o = run(&["band"], &model, None, None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("subexponential"));
}

#[test]
fn stdout_report_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let model = free_model(tmp.path(), 2);
    let cfg = write(tmp.path(), "cfg.json", r#"{"pairs": 5}"#);
    let a = exotic().args(["bandcheck", "--seed", "4", "--model"]).arg(&model).arg("--config").arg(&cfg).output().unwrap();
    let b = exotic().args(["bandcheck", "--seed", "4", "--model"]).arg(&model).arg("--config").arg(&cfg).output().unwrap();
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["parameters"]["seed"], 4);
}

#[test]
fn every_subcommand_runs_on_small_inputs() {
    let tmp = TempDir::new().unwrap();
    let model = write(
        tmp.path(),
        "z2x.json",
        r#"{"backend":{"free":2},"units":3,"action":[[1,2,0],[0,2,1]]}"#,
    );
    let cases: &[(&str, &str)] = &[
        ("growth", r#"{"k_max": 4}"#),
        ("delta", r#"{"radius": 2}"#),
        ("pdcheck", r#"{"kernel": {"haagerup": 3}, "random_tuples": 3}"#),
        ("gns", r#"{"kernel": {"exp_length": 0.8}, "radius": 1}"#),
        ("haagerup", r#"{"n": [1, 2], "k": [0, 2], "eps": [0.1]}"#),
        ("bandcheck", r#"{"k": 1, "n": 1, "pairs": 3}"#),
        ("norm", r#"{"ladder": [2, 3]}"#),
        ("powerseq", r#"{"n_max": 2}"#),
        ("normbound", r#"{"alpha": [0.5], "k": [1], "p": [2.0], "ladder": [3]}"#),
        ("extend", r#"{"alpha": 0.3, "p": 2.0, "k_max": 16}"#),
        ("band", r#"{"k_max": 4}"#),
        ("certify", r#"{"growth_k_max": 4}"#),
    ];
    for (i, (op, cfg)) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("cfg{i}.json"), cfg);
        let out = tmp.path().join(op);
        let o = run(&[op], &model, Some(&cfg), Some(&out));
        assert_eq!(o.status.code(), Some(0), "{op}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(report(&out)["operation"], *op);
    }
}
