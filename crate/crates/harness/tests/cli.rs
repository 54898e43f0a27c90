use std::fs;
use std::path::Path;
use std::process::Command;

use clap::Parser;
use uavlc_harness::cli::{run, Cli};

const SMALL: &[&str] = &[
    "world.arena_side=30",
    "world.gu_count=3",
    "world.step_cap=60",
    "td3.hidden_sizes=[16,16]",
    "td3.batch_size=8",
    "td3.learn_start=20",
    "sweep.gu_counts=[3,6]",
    "sweep.seeds=2",
    "baseline.aco.iterations=10",
];

fn invoke(out: &Path, args: &[&str]) -> uavlc_harness::Result<Vec<std::path::PathBuf>> {
    let mut argv = vec!["uavlc".to_string(), "--out".into(), out.display().to_string()];
    for s in SMALL {
        argv.push("--set".into());
        argv.push((*s).into());
    }
    argv.extend(args.iter().map(|s| s.to_string()));
    run(&Cli::try_parse_from(argv).expect("arguments parse"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn train_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    invoke(a.path(), &["train", "--episodes", "5"]).unwrap();
    invoke(b.path(), &["train", "--episodes", "5"]).unwrap();
    for f in ["convergence.csv", "checkpoint.json", "policy.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let csv = String::from_utf8(read(a.path(), "convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.starts_with("episode,return,steps,distance,success,served,noise_std\n"));
}

#[test]
fn resume_matches_a_straight_run() {
    let straight = tempfile::tempdir().unwrap();
    invoke(straight.path(), &["train", "--episodes", "6"]).unwrap();

    let split = tempfile::tempdir().unwrap();
    invoke(split.path(), &["train", "--episodes", "3"]).unwrap();
    let ck = split.path().join("checkpoint.json");
    let ck = ck.to_str().unwrap();
    invoke(split.path(), &["train", "--episodes", "6", "--resume", ck]).unwrap();

    for f in ["convergence.csv", "checkpoint.json", "policy.json"] {
        assert_eq!(read(straight.path(), f), read(split.path(), f), "{f}");
    }
}

#[test]
fn compare_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    invoke(a.path(), &["train", "--episodes", "2"]).unwrap();
    invoke(a.path(), &["compare"]).unwrap();
    let first = read(a.path(), "compare.csv");
    let first_map = read(a.path(), "compare_trained_map.csv");
    invoke(a.path(), &["compare"]).unwrap();
    assert_eq!(first, read(a.path(), "compare.csv"));
    assert_eq!(first_map, read(a.path(), "compare_trained_map.csv"));

    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("I,algorithm,mean,std,runs,failures\n"));
    // 2 GU counts x 3 planners, plus the learned policy on its own map.
    assert_eq!(text.lines().count(), 1 + 6 + 1);
}

#[test]
fn compare_without_policy_omits_learned_rows() {
    let dir = tempfile::tempdir().unwrap();
    let files = invoke(dir.path(), &["compare"]).unwrap();
    assert!(!dir.path().join("compare_trained_map.csv").exists());
    assert_eq!(files.len(), 2);
    let text = String::from_utf8(read(dir.path(), "compare.csv")).unwrap();
    assert!(!text.contains("TD3"));
}

#[test]
fn dump_traj_has_one_row_per_slot() {
    let dir = tempfile::tempdir().unwrap();
    invoke(dir.path(), &["train", "--episodes", "1"]).unwrap();
    invoke(dir.path(), &["dump-traj"]).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(dir.path(), "dump-traj_manifest.json")).unwrap();
    let steps = manifest["summary"]["steps"].as_u64().unwrap() as usize;
    let traj = String::from_utf8(read(dir.path(), "trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), steps + 1);
    assert!(traj.lines().next().unwrap().ends_with(",comm_radius,reception_radius"));
    let gus = String::from_utf8(read(dir.path(), "trajectory_gus.csv")).unwrap();
    assert_eq!(gus.lines().count(), 4);
}

#[test]
fn altitude_and_baselines_write_csvs() {
    let dir = tempfile::tempdir().unwrap();
    invoke(dir.path(), &["altitude"]).unwrap();
    let alt = String::from_utf8(read(dir.path(), "altitude.csv")).unwrap();
    assert_eq!(alt.lines().count(), 2);
    for (arg, file) in [("scan", "baseline_scan.csv"), ("greedy", "baseline_greedy_rrt.csv"), ("aco", "baseline_aco_rrt.csv")] {
        invoke(dir.path(), &["baseline", arg]).unwrap();
        assert!(dir.path().join(file).exists(), "{file}");
    }
}

#[test]
fn sweep_writes_every_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    invoke(
        dir.path(),
        &["--set", "sweep.altitude_start=20", "--set", "sweep.altitude_stop=22", "--set", "sweep.altitude_step=1", "sweep"],
    )
    .unwrap();
    let text = String::from_utf8(read(dir.path(), "sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 3);
}

fn exit_code(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_uavlc"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(exit_code(&["altitude"], p), 0);
    assert_eq!(exit_code(&["--set", "world.bogus=1", "altitude"], p), 2);
    assert_eq!(exit_code(&["--set", "world.altitude=5", "altitude"], p), 2);
    let bad = p.join("bad.json");
    fs::write(&bad, "{\n  \"world\": {\n    \"gu_count\": \"ten\"\n  }\n}\n").unwrap();
    assert_eq!(exit_code(&["--config", bad.to_str().unwrap(), "altitude"], p), 2);
    // Missing policy file is a runtime failure.
    assert_eq!(exit_code(&["eval", "--policy", p.join("none.json").to_str().unwrap()], p), 3);
}
