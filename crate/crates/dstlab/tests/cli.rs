use std::process::{Command, Output};

fn dstlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dstlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o).lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn ipl_figure_ends_at_log2n_ten() {
    let o = dstlab(&["moments", "--param", "ipl", "--nmax", "1024", "--figure"]);
    assert!(o.status.success());
    let r = rows(&o);
    let last = r.last().unwrap();
    assert_eq!(last[0], "10");
    let v: f64 = last[1].parse().unwrap();
    assert!((v - 0.265246).abs() < 5e-6, "{v}");
}

#[test]
fn bucket_variance_points() {
    let o = dstlab(&["moments", "--param", "kpl", "--b", "2", "--nmax", "20"]);
    let r = rows(&o);
    assert_eq!(r[0], ["n", "mu", "var"]);
    assert_eq!(r[6][2], "0.1875");
    assert_eq!(r[7][2], "0.4375");

    let o = dstlab(&["moments", "--param", "npl", "--b", "2", "--nmax", "20"]);
    let r = rows(&o);
    assert_eq!(r[0], ["n", "mu", "var", "nodes_mu", "nodes_var", "cov"]);
    assert_eq!(r[5][2], "0.25");
}

#[test]
fn exact_mode_prints_fractions() {
    let o = dstlab(&["moments", "--param", "ipl", "--nmax", "4", "--mode", "exact"]);
    let r = rows(&o);
    assert_eq!(r[0].last().unwrap(), "var_exact");
    assert_eq!(r[5].last().unwrap(), "31/64");
}

#[test]
fn constants_tables() {
    let o = dstlab(&["constants", "--filter", "c_h"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&o).len(), 1 + 5);
    let o = dstlab(&["constants", "--filter", "c10"]);
    assert_eq!(rows(&o).len(), 1 + 6);

    let o = dstlab(&["--format", "json", "constants"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.as_array().unwrap().len() >= 12);
}

#[test]
fn impossible_tolerance_fails() {
    let o = dstlab(&["constants", "--filter", "c_h", "--tol", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(dstlab(&["moments", "--param", "ipl", "--b", "2", "--nmax", "4"]).status.code(), Some(2));
    assert_eq!(dstlab(&["moments", "--param", "nope", "--nmax", "4"]).status.code(), Some(2));
    assert_eq!(dstlab(&["simulate", "--param", "ppl", "--b", "2", "--n", "4"]).status.code(), Some(2));
    assert_eq!(dstlab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn validate_suites() {
    for suite in ["oracle", "charlier", "invariants"] {
        let o = dstlab(&["validate", "--suite", suite, "--format", "json"]);
        assert_eq!(o.status.code(), Some(0), "{suite}");
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(v[0]["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    }
}

#[test]
fn charlier_trajectory() {
    let o = dstlab(&["charlier", "--n", "10", "--target", "alternating", "--j", "80"]);
    let r = rows(&o);
    assert_eq!(r[0], ["j", "partial_sum", "error"]);
    let at49: f64 = r[50][1].parse().unwrap();
    assert!((at49 - 0.9968).abs() < 1e-3);
    let last: f64 = r[81][1].parse().unwrap();
    assert!((last - 1.0).abs() < 1e-9);
}

#[test]
fn depth_near_constant() {
    let o = dstlab(&["--format", "json", "depth", "--n", "1024"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let gap = v["mean_minus_log2n"].as_f64().unwrap() - v["mean_constant"].as_f64().unwrap();
    assert!(gap.abs() < 0.02, "{gap}");
}

#[test]
fn simulation_is_reproducible() {
    let args = ["simulate", "--param", "dpl", "--n", "50", "--trials", "2000", "--seed", "7"];
    let a = dstlab(&args);
    let b = dstlab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(rows(&a)[0], ["value", "count"]);
    let total: u64 = rows(&a)[1..].iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 2000);
}

#[test]
fn tree_from_key_file() {
    let dir = std::env::temp_dir().join(format!("dstlab-keys-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("keys.txt");
    std::fs::write(&path, "010111\n101011\n100001\n011011\n111110\n110111\n010011\n011110\n000100\n").unwrap();
    let o = dstlab(&["--format", "json", "tree", "--keys", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["kpl"], 16);
    assert_eq!(v["leaves"], 4);
    assert_eq!(v["ppl"], 12);
    std::fs::remove_dir_all(&dir).ok();
}
