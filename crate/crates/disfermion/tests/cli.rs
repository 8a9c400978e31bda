// SPDX-License-Identifier: MIT OR Apache-2.0

use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disfermion"))
        .args(args)
        .env("DISFERMION_CACHE", env!("CARGO_TARGET_TMPDIR"))
        .output()
        .expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn count_example() {
    let o = run(&["count", "--domain", "rect(0,0,2,2)", "--sink", "0,0"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["covers"], 4);
    assert_eq!(v["manifest"]["command"], "count");
    assert_eq!(v["manifest"]["backend"], "exact");
}

#[test]
fn identical_arguments_identical_output() {
    let args = ["twopoint", "--domain", "rect(0,0,4,4)", "--sink", "0,0", "--w", "2,1", "--b", "3,3"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = run(&["twopoint", "--domain", "rect(0,0,4,4)", "--sink", "0,0", "--w", "2,1", "--b", "1,1"]);
    assert_ne!(json(&a)["manifest"]["config_hash"], json(&other)["manifest"]["config_hash"]);
}

#[test]
fn two_point_backends_agree() {
    let base = ["twopoint", "--domain", "rect(0,0,1,1)", "--w", "1,0", "--b", "0,0"];
    let e = json(&run(&base));
    assert_eq!(e["value"]["re"], "-1/2");
    let mut float = base.to_vec();
    float.extend(["--backend", "float"]);
    let f = json(&run(&float));
    assert!((f["value"][0].as_f64().unwrap() + 0.5).abs() < 1e-14);
}

#[test]
fn edges_csv() {
    let o = run(&["edges", "--domain", "rect(0,0,2,2)", "--sink", "0,0"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest: {"));
    assert!(lines.next().unwrap().starts_with("edge,black_x"));
    assert_eq!(lines.count(), 10);
}

#[test]
fn observable_forms() {
    let base = ["observable", "--domain", "rect(0,0,2,2)", "--sink", "0,0", "--pairs", "1,0:2,0;0,1:1,1"];
    assert_eq!(json(&run(&base))["expectation"]["re"], "5/8");
    let mut d = base.to_vec();
    d.push("--disjoint");
    assert_eq!(json(&run(&d))["expectation"]["re"], "1/4");
}

#[test]
fn holocheck_and_green() {
    let h = run(&["holocheck", "--domain", "rect(0,0,4,4)", "--sink", "0,0"]);
    assert!(h.status.success());
    assert_eq!(json(&h)["holds"], true);
    let g = run(&["green", "--domain", "rect(0,0,4,4)", "--sink", "0,0", "--w", "2,1"]);
    assert!(g.status.success());
    let v = json(&g);
    assert_eq!(v["green_identity"]["holds"], true);
    assert_eq!(v["harmonic_conjugacy"]["holds"], true);
    let k = json(&run(&["green", "--z", "1,1"]));
    assert_eq!(k["G"]["rational"], 0);
    assert_eq!(k["G"]["inv_pi"], -1);
}

#[test]
fn berezin_command() {
    let v = json(&run(&["berezin", "--domain", "rect(0,0,1,1)", "--insert", "eta:1,0 xi:0,0"]));
    assert_eq!(v["correlator"]["re"], "-1/2");
    // Both sectors contribute det K: Z = 2² up to sign.
    assert_eq!(v["partition_function"]["re"].as_i64().unwrap().abs(), 4);
}

#[test]
fn nullcheck_verdicts() {
    let unit = json(&run(&["nullcheck", "--field", "1"]));
    assert_eq!(unit["report"]["verdict"], "WITNESSED-NONNULL");
    let zero = json(&run(&["nullcheck", "--field", "eta(1,0)*xi(0,0) - eta(1,0)*xi(0,0)"]));
    assert_eq!(zero["report"]["verdict"], "NULL-CONSISTENT");
}

#[test]
fn errors_are_json() {
    let o = run(&["count", "--domain", "rect(0,0,2,0)"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(json(&o)["error"].as_str().unwrap().contains("not dimerable"));
    let bad = run(&["nullcheck", "--field", "eta(1,0)"]);
    assert_eq!(bad.status.code(), Some(3));
    let usage = run(&["count"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn converge_csv() {
    let o = run(&["converge", "--nmax", "4", "--w", "1,0", "--z", "2,0"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let errs: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("two-point,1,0,2,0,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(errs.len(), 4);
    assert!(errs[3] < errs[0]);
}

#[test]
fn anticommute_and_virasoro() {
    let a = run(&["anticommute", "--n", "1", "--m", "-1", "--alpha", "minus", "--beta", "plus", "--field", "eta(1,0)*xi(0,0)"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(json(&a)["verdict"], "NULL-CONSISTENT");
    assert_eq!(json(&a)["expected"], 1);
    let v = run(&["virasoro", "--n", "2", "--m", "-2", "--field", "1", "--quick"]);
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stdout));
    let v = json(&v);
    assert_eq!(v["verdict"], "NULL-CONSISTENT");
    assert!(v["window"]["n"]["k_min"].is_i64());
}
