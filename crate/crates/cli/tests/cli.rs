use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mfcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfcc"))
        .args(args)
        .env_remove("MFCC_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const TOPO: &str = "\
# two disjoint routes
node S
node A
node B
node D
link S-A S A 1e6 0.001 0 64
link A-D A D 1e6 0.001 0 64
link S-B S B 1e6 0.001 0 64
link B-D B D 1e6 0.001 0 64
link D-A D A 1e6 0.001 0 64
link A-S A S 1e6 0.001 0 64
link D-B D B 1e6 0.001 0 64
link B-S B S 1e6 0.001 0 64
";

#[test]
fn lists_the_catalog() {
    let o = mfcc(&["list-scenarios"]);
    assert!(o.status.success());
    let names = stdout(&o);
    for n in ["shared:n=1", "xyz:2:1:1", "disjoint:single"] {
        assert!(names.lines().any(|l| l == n), "{n} missing from\n{names}");
    }
}

#[test]
fn validates_topologies() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("t.topo");
    fs::write(&good, TOPO).unwrap();
    let o = mfcc(&["validate-topology", "--topology", good.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("link S-A"));

    let bad = dir.path().join("bad.topo");
    fs::write(&bad, "node S\nlink x S Q 1 1 0 1\n").unwrap();
    let o = mfcc(&["validate-topology", "--topology", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(mfcc(&["run"]).status.code(), Some(2));
    assert_eq!(mfcc(&["run", "--scenario", "shared:n=1", "--what"]).status.code(), Some(2));
    assert_eq!(mfcc(&["run", "--scenario", "nonsense:n=1"]).status.code(), Some(2));
    assert_eq!(mfcc(&["run", "--scenario", "custom:src=S,dst=D"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("t.topo");
    fs::write(&topo, TOPO).unwrap();
    let o = mfcc(&["run", "--scenario", "shared:n=1", "--topology", topo.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--scenario", "shared:n=1", "--duration", "3", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    mfcc(&args)
}

#[test]
fn run_writes_reproducible_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let o = run_into(&out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("nmcc"));
    let first = fs::read(out.join("runs.csv")).unwrap();
    assert!(String::from_utf8_lossy(&first).starts_with("name,replication,seed,connection,algorithm,share"));
    assert!(out.join("aggregate.csv").exists());

    let o = run_into(&out, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));

    let o = run_into(&out, &["--force"]);
    assert!(o.status.success());
    assert_eq!(fs::read(out.join("runs.csv")).unwrap(), first);
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mfcc"))
        .args(["run", "--scenario", "shared:n=1", "--duration", "2", "--replications", "1", "--out", out])
        .env("MFCC_SEED", "42")
        .output()
        .unwrap();
    assert!(o.status.success());
    let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert!(runs.lines().nth(1).unwrap().starts_with("shared:n=1,0,42,"), "{runs}");
}

#[test]
fn custom_scenarios_use_the_topology_file() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("t.topo");
    fs::write(&topo, TOPO).unwrap();
    let o = mfcc(&[
        "run",
        "--scenario",
        "custom:src=S,dst=D,alg=nmcc,k=2,competitors=1",
        "--topology",
        topo.to_str().unwrap(),
        "--duration",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("single-1"));
}

#[test]
fn reproduce_exit_status_follows_the_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = mfcc(&["reproduce", "--duration", "2", "--replications", "2", "--skip-suites", "--out", out]);
    let text = stdout(&o);
    let any_fail = text.lines().any(|l| l.starts_with("[FAIL]"));
    assert!(text.lines().any(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]")));
    assert_eq!(o.status.code(), Some(if any_fail { 1 } else { 0 }));
    let checks = fs::read_to_string(dir.path().join("checks.txt")).unwrap();
    assert_eq!(checks.lines().count(), text.lines().filter(|l| l.starts_with('[')).count());
}
