//! End-to-end runs of the `blindver` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("blindver-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn blindver(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blindver"))
        .args(args)
        .current_dir(cwd)
        .env_remove("BLINDVER_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_version_succeed() {
    let dir = scratch("help");
    assert_eq!(blindver(&["--help"], &dir).status.code(), Some(0));
    assert_eq!(blindver(&["--version"], &dir).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = scratch("usage");
    for args in [
        &["run", "--protocol", "nope"][..],
        &["run", "--protocol", "trap", "--n", "10"],
        &["run", "--adversary", "honest"],
        &["verify", "bogus"],
        &["bounds", "--d", "4-2"],
        &["run", "--config", "missing.toml"],
        &["frobnicate"],
    ] {
        let out = blindver(args, &dir);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn failed_checks_exit_with_two() {
    let dir = scratch("assert");
    // the six faces of a cube are not a trivial chain in this lattice model
    let out = blindver(&["verify", "lattice"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL lattice: the six faces of a cube"));
    assert!(text.contains("PASS lattice: a bulk face flips exactly its two cubes"));
}

#[test]
fn run_writes_results_summary_and_manifest() {
    let dir = scratch("run");
    let out = blindver(&["run", "--protocol", "trap", "--n", "9", "--adversary", "honest", "--trials", "1000"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("out/trials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("trial_id,outcome,trap_flips,syndrome_count,logical_flag"));
    assert_eq!(lines.count(), 1000);
    let summary = json(&dir.join("out/summary.json"));
    assert_eq!(summary["fooled"], 0);
    assert_eq!(summary["p_hat"], 0.0);
    assert_eq!(summary["bound_satisfied"], true);
    let manifest = json(&dir.join("out/manifest.json"));
    assert_eq!(manifest["command"], "run");
    assert_eq!(manifest["config"]["run"]["trials"], 1000);
}

#[test]
fn flags_override_the_config_file_and_env_sets_the_output_dir() {
    let dir = scratch("config");
    std::fs::write(
        dir.join("exp.toml"),
        "[protocol]\nprotocol = \"topo\"\nd = 3\n\n[adversary]\nkind = \"targeted\"\nfactor = \"XZ\"\n\n[run]\ntrials = 300\nseed = 4\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_blindver"))
        .args(["run", "--config", "exp.toml", "--trials", "500"])
        .current_dir(&dir)
        .env("BLINDVER_OUTPUT_DIR", "elsewhere")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.join("elsewhere/summary.json"));
    assert_eq!(summary["trials"], 500);
    assert_eq!(summary["protocol"], "topological");
    assert_eq!(summary["code_distance"], 3);
    let manifest = json(&dir.join("elsewhere/manifest.json"));
    assert_eq!(manifest["seed"], 4);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = scratch("badkey");
    std::fs::write(dir.join("bad.toml"), "[run]\ntrails = 5\n").unwrap();
    assert_eq!(blindver(&["run", "--config", "bad.toml"], &dir).status.code(), Some(1));
}

#[test]
fn bounds_print_csv() {
    let dir = scratch("bounds");
    let out = blindver(&["bounds", "--d", "3,6", "--output-dir", "b"], &dir);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "d,p1_bound,p2_bound");
    let fields: Vec<f64> = rows[2].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[0], 6.0);
    assert!((fields[1] - 4.0 / 9.0).abs() < 1e-12);
    assert!((fields[2] - 0.75f64.powi(6)).abs() < 1e-12);
    assert_eq!(std::fs::read_to_string(dir.join("b/bounds.csv")).unwrap(), text);
}

#[test]
fn sweep_covers_each_distance() {
    let dir = scratch("sweep");
    let out = blindver(&["sweep", "--d", "1-3", "--trials", "500", "--assert-bounds"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("out/sweep.csv")).unwrap();
    let ds: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ds, ["1", "2", "3"]);
}
