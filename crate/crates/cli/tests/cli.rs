use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shortcut-csp"))
        .args(args)
        .current_dir(data_dir())
        .env_remove("SHORTCUT_CSP_CACHE")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.push("--json");
    let out = cli(&full);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().next().unwrap_or_else(|| panic!("no output for {args:?}"));
    (out.status.code().unwrap(), serde_json::from_str(line).unwrap())
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["solve", "instances/beta.json"]).status.code(), Some(0));
    assert_eq!(cli(&["solve", "instances/rcc5-triangles-s1.json"]).status.code(), Some(1));
    let none = ["detect", "instances/hs-ab.json", "--kind", "backdoor", "--k", "1", "--map", "builtin:rk"];
    assert_eq!(cli(&none).status.code(), Some(2));
    assert_eq!(cli(&["solve", "instances/missing.json"]).status.code(), Some(3));
    assert_eq!(cli(&["solve", "instances/beta.json", "--strategy", "backdoor"]).status.code(), Some(4));
    assert_eq!(cli(&["--jobs", "0", "solve", "instances/beta.json"]).status.code(), Some(4));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(4));
}

#[test]
fn too_small_radius_is_a_module_error() {
    let out = cli(&["compute-map", "--kind", "branch", "--source", "eq:delta", "--target", "eq:basic", "--r", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn strategies_agree_on_bundled_instances() {
    for s in ["s0", "s1"] {
        let inst = format!("instances/rcc5-triangles-{s}.json");
        let door = format!("doors/rcc5-triangles-{s}.sidedoor.json");
        let (a, plain) = json(&["solve", &inst]);
        let (b, side) =
            json(&["solve", &inst, "--strategy", "sidedoor", "--door", &door, "--map", "builtin:rcc5-split:3"]);
        assert_eq!(a, b);
        assert_eq!(plain["answer"], side["answer"]);
        assert_eq!(side["bound_check"]["ok"], Value::Bool(true));
    }
    let (a, plain) = json(&["solve", "instances/rcc5-planted-b3.json"]);
    for solver in ["oracle", "aclosure"] {
        let (b, back) = json(&[
            "solve",
            "instances/rcc5-planted-b3.json",
            "--strategy",
            "backdoor",
            "--door",
            "doors/rcc5-planted-b3.backdoor.json",
            "--map",
            "maps/rcc5-all-basic.simp.json",
            "--solver",
            solver,
        ]);
        assert_eq!(a, b);
        assert_eq!(plain["answer"], back["answer"]);
    }
}

#[test]
fn delta_chain_through_both_doors() {
    let (a, _) = json(&["solve", "instances/delta-chain.json"]);
    let (b, _) = json(&[
        "solve",
        "instances/delta-chain.json",
        "--strategy",
        "sidedoor",
        "--door",
        "doors/delta-chain.sidedoor.json",
        "--map",
        "builtin:delta",
    ]);
    assert_eq!(a, b);
}

#[test]
fn timings_only_on_request() {
    let (_, plain) = json(&["solve", "instances/beta.json"]);
    assert!(plain.get("elapsed_ms").is_none());
    let (_, timed) = json(&["--timings", "solve", "instances/beta.json"]);
    assert!(timed["elapsed_ms"].is_number());
    assert_eq!(plain["args"], timed["args"]);
}

#[test]
fn sidedoor_detection_on_complete_graphs() {
    let (code, k3) = json(&["detect", "instances/k3.json", "--kind", "sidedoor", "--k", "1", "--r", "3", "--target", "rcc5:gamma"]);
    assert_eq!(code, 0);
    assert_eq!(k3["answer"], "FOUND");
    let (code, _) = json(&["detect", "instances/k4.json", "--kind", "sidedoor", "--k", "2", "--r", "3", "--target", "rcc5:gamma"]);
    assert_eq!(code, 2);
}

#[test]
fn generated_instances_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hs.json");
    let out = cli(&["gen", "hitting-set", "inputs/hs-ab.json"]);
    assert_eq!(out.status.code(), Some(0));
    std::fs::write(&path, &out.stdout).unwrap();
    let p = path.to_str().unwrap();
    let found = cli(&["detect", p, "--kind", "backdoor", "--k", "2", "--map", "builtin:rk"]);
    assert_eq!(found.status.code(), Some(0));
}

#[test]
fn computed_maps_are_cached() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "solve",
        "instances/rcc5-planted-b3.json",
        "--strategy",
        "backdoor",
        "--door",
        "doors/rcc5-planted-b3.backdoor.json",
        "--map",
        "simp:rcc5:all,rcc5:basic",
    ];
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_shortcut-csp"))
            .args(args)
            .current_dir(data_dir())
            .env("SHORTCUT_CSP_CACHE", dir.path())
            .output()
            .unwrap()
    };
    let first = run();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    let second = run();
    assert_eq!(first.status.code(), second.status.code());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    let out = cli(&["bench", "--suite", "sidedoor2-rcc5", "--count", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("suite,index,seed"));
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
}
