use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

use milcheck::kripke::{load_model, save_model, KripkeModel, Team};

fn milcheck(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_milcheck"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write(dir: &TempDir, name: &str, m: &KripkeModel, t: &Team) -> String {
    let path = dir.path().join(name);
    save_model(m, t, &path).unwrap();
    path.to_str().unwrap().to_string()
}

/// Four worlds carrying every combination of x and y.
fn grid() -> KripkeModel {
    KripkeModel::builder(4)
        .label(1, &["x"])
        .label(2, &["y"])
        .label(3, &["x", "y"])
        .build()
        .unwrap()
}

fn json(stdout: &str) -> Value {
    let v: Value = serde_json::from_str(stdout.trim()).expect("one json document");
    assert_eq!(v["schema_version"], 1, "{stdout}");
    v
}

#[test]
fn check_exit_codes() {
    let dir = TempDir::new().unwrap();
    let m = grid();
    let model = write(&dir, "grid.json", &m, &m.full_team());
    assert_eq!(milcheck(&["check", &model, "indep(x ;; y)"]).0, 0);
    assert_eq!(milcheck(&["check", &model, "dep(x ; y)"]).0, 1);
    assert_eq!(milcheck(&["check", &model, "dep(x ; y)", "--team", "0,3"]).0, 0);
    assert_eq!(milcheck(&["check", &model, "dep(x ; y)", "--team", "0,9"]).0, 2);
    assert_eq!(milcheck(&["check", &model, "x &"]).0, 2);
    assert_eq!(milcheck(&["check", "/nonexistent/model.json", "x"]).0, 2);
    assert_eq!(milcheck(&["check", &model, "dep(; x) | dep(; y)", "--budget", "3"]).0, 3);

    let formula = dir.path().join("f.txt");
    std::fs::write(&formula, "indep(x ;; y)\n").unwrap();
    let (code, out, _) = milcheck(&["--json", "check", &model, &format!("@{}", formula.display())]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["status"], "holds");
    assert_eq!(v["command"], "check");
    assert_eq!(v["exit_code"], 0);
}

#[test]
fn sat_exit_codes() {
    assert_eq!(milcheck(&["sat", "p & ~p", "--max-worlds", "3"]).0, 1);
    assert_eq!(milcheck(&["sat", "p & ~p", "--max-worlds", "1", "--allow-empty-team"]).0, 0);
    assert_eq!(milcheck(&["sat", "p", "--max-worlds", "0"]).0, 2);
    assert_eq!(milcheck(&["sat", "p & ~p", "--max-worlds", "3", "--budget", "5"]).0, 3);
    let (code, out, _) = milcheck(&["--json", "sat", "<>p & <>~p"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["model"]["worlds"].as_array().unwrap().len(), 2);
}

#[test]
fn translate_exit_codes() {
    let a = milcheck(&["translate", "p | q", "--format", "tptp"]);
    assert_eq!(a.0, 0);
    assert!(a.1.contains("fof("));
    assert_eq!(a, milcheck(&["translate", "p | q", "--format", "tptp"]));
    let s = milcheck(&["translate", "[]indep(p ; ; q)", "--format", "smtlib"]);
    assert_eq!(s.0, 0);
    assert!(s.1.contains("(check-sat)"));
    assert_eq!(milcheck(&["translate", "p", "--format", "dimacs"]).0, 2);
    assert_eq!(milcheck(&["translate", "D[zero](p)"]).0, 2);
    let v = json(&milcheck(&["--json", "translate", "p"]).1);
    assert_eq!(v["prefix_ok"], true);
}

#[test]
fn bisim_exit_codes() {
    let dir = TempDir::new().unwrap();
    let chain = KripkeModel::builder(2).edge(0, 1).build().unwrap();
    let fork = KripkeModel::builder(3).edge(0, 1).edge(0, 2).build().unwrap();
    let a = write(&dir, "chain.json", &chain, &Team::from_indices([0]));
    let b = write(&dir, "fork.json", &fork, &Team::from_indices([0]));
    let c = write(&dir, "leaf.json", &fork, &Team::from_indices([1]));
    assert_eq!(milcheck(&["bisim", &a, &b]).0, 0);
    assert_eq!(milcheck(&["bisim", &a, &c]).0, 1);
    let (code, out, _) = milcheck(&["--json", "bisim", &a, &b, "--vars", "x", "--formula", "[]D[zero](x)"]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["invariance"]["invariant"], false);
    assert_eq!(v["invariance"]["undefinable_atoms"][0], "zero");
    assert_eq!(milcheck(&["bisim", &a, "/nonexistent.json"]).0, 2);
}

#[test]
fn dc_exit_codes() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("dc3.json");
    let (code, out, _) = milcheck(&["dc", "--n", "3", "--emit-model", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let (m, t) = load_model(&path).unwrap();
    assert_eq!(m.world_count(), 37);
    assert_eq!(t, Team::from_indices([0]));
    assert_eq!(milcheck(&["dc", "--n", "2"]).0, 2);
    assert_eq!(milcheck(&["dc", "--n", "3", "--verify-proposition"]).0, 0);
    assert_eq!(milcheck(&["dc", "--succinct", "3"]).0, 0);
    assert_eq!(milcheck(&["dc", "--succinct", "2"]).0, 2);
    assert_eq!(milcheck(&["dc", "--check", "--verify-proposition"]).0, 2);
    // the local anonymity formulas fail on the protocol model
    let (code, out, _) = milcheck(&["--json", "dc", "--n", "3", "--check"]);
    assert_eq!(code, 1);
    let v = json(&out);
    assert_eq!(v["phi_g"], true);
    assert_eq!(v["phi_local"].as_array().unwrap().len(), 6);
}

#[test]
fn corpus_is_byte_identical_per_seed() {
    let a = milcheck(&["corpus", "--seed", "1", "--size", "24"]);
    assert_eq!(a.0, 0);
    assert_eq!(a, milcheck(&["corpus", "--seed", "1", "--size", "24"]));
    assert_ne!(a.1, milcheck(&["corpus", "--seed", "2", "--size", "24"]).1);
    let v = json(&milcheck(&["--json", "corpus", "--seed", "1", "--size", "6"]).1);
    assert_eq!(v["formulas"].as_array().unwrap().len(), 6);
}

#[test]
fn usage_errors() {
    assert_eq!(milcheck(&[]).0, 2);
    assert_eq!(milcheck(&["frobnicate"]).0, 2);
    assert_eq!(milcheck(&["check"]).0, 2);
    let (code, out, _) = milcheck(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("translate"));
    assert!(Path::new(env!("CARGO_BIN_EXE_milcheck")).exists());
}
