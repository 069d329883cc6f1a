use std::path::Path;
use std::process::{Command, Output};

fn fedsciml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedsciml")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

#[test]
fn partition_writes_shards_w1_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = fedsciml(&["partition", "--problem", "gramacy", "--n", "2", "--out", &out_arg(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["shards.csv", "w1.json", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let w1: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("w1.json")).unwrap()).unwrap();
    assert!(w1.to_string().contains("w1"));
}

#[test]
fn unknown_problem_is_usage_error() {
    let o = fedsciml(&["partition", "--problem", "navier-stokes"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("navier-stokes"));
}

#[test]
fn divergence_with_adam_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = fedsciml(&["divergence", "--problem", "poisson1d", "--n", "6", "--rounds", "2", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--client-opt sgd"));
}

#[test]
fn bad_thread_count_is_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_fedsciml"))
        .args(["partition", "--problem", "gramacy"])
        .env("FEDSCIML_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_then_replay_reproduces_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = fedsciml(&["run", "--problem", "gramacy", "--n", "20", "--rounds", "5", "--out", &out_arg(a.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = a.path().join("manifest.json");
    let o = fedsciml(&["replay", &manifest.display().to_string(), "--out", &out_arg(b.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["results.csv", "history.csv", "params.ckpt"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn w1_between_shard_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = fedsciml(&["partition", "--problem", "gramacy", "--n", "2", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let shards = dir.path().join("shards.csv").display().to_string();
    let plan = dir.path().join("plan.csv");
    let o = fedsciml(&["w1", &shards, &shards, "--plan", &plan.display().to_string()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let w: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert_eq!(w, 0.0);
    assert!(plan.exists());
}

#[test]
fn results_csv_header_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let o = fedsciml(&["run", "--problem", "gramacy", "--mode", "centralized", "--rounds", "1", "--out", &out_arg(dir.path())]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "schema_version,problem,mode,n,clients,client,local_epochs,rounds,seed,w1,l2_rel_error"
    );
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], ["1", "gramacy", "centralized"]);
}
