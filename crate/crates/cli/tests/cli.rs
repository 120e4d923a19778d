use std::path::Path;
use std::process::{Command, Output};

use expforge::ladder::{run_ladder, LadderConfig, LadderError, Rung};
use expforge::{Cycle, Parameter};
use expforge_cli::io::{decode_pgm, sha256_hex, RunManifest};

fn expforge(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expforge"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("EXPFORGE_OUT")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn psf_forced_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = expforge(dir.path(), &["psf", "--m", "1", "--p", "1", "--seed", "0+6.3i"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("psf.json")).unwrap()).unwrap();
    let lambda: Parameter = serde_json::from_value(v["psf"]["lambda"].clone()).unwrap();
    assert!((lambda.value() - Parameter::two_pi_i(1).unwrap().value()).norm() < 1e-12);
    assert!(v["psf"]["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = expforge(dir.path(), &["--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_config_is_usage_error_naming_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = \"2pi*i\"\ndx = 1.0\n").unwrap();
    let out = expforge(dir.path(), &["--config", cfg.to_str().unwrap(), "ladder"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`dx`"));
}

#[test]
fn manifest_digests_match_files_and_repeat() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = expforge(dir.path(), &["render", "escape", "--lambda", "1", "--grid", "-4,4,32", "--max-iter", "50"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma.outputs, mb.outputs);
    assert_eq!(ma.input_hash, mb.input_hash);
    for o in &ma.outputs {
        assert_eq!(sha256_hex(&std::fs::read(a.path().join(&o.path)).unwrap()), o.sha256);
    }
    let (nx, ny, _) = decode_pgm(&std::fs::read(a.path().join("escape.pgm")).unwrap()).unwrap();
    assert_eq!((nx, ny), (32, 32));
}

#[test]
fn env_var_overrides_out() {
    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_expforge"))
        .args(["--out", flag.path().to_str().unwrap(), "orbit", "--lambda", "2pi*i", "--n", "5"])
        .env("EXPFORGE_OUT", env.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(env.path().join("orbit.csv").exists());
    assert!(!flag.path().join("orbit.csv").exists());
}

#[test]
fn cycle_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = expforge(dir.path(), &["cycle", "--lambda", "1", "--x", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let cycle: Cycle = serde_json::from_slice(&std::fs::read(dir.path().join("cycle.json")).unwrap()).unwrap();
    let again = expforge::cycle::find_cycle_near_line(&Parameter::from_parts(1.0, 0.0).unwrap(), 6.0, 3, 1e-10).unwrap();
    assert_eq!(cycle, again);
}

#[test]
fn ladder_failure_persists_completed_rungs() {
    let dir = tempfile::tempdir().unwrap();
    let out = expforge(dir.path(), &["ladder", "--k", "1"]);
    let rungs: Vec<Rung> = serde_json::from_slice(&std::fs::read(dir.path().join("rungs.json")).unwrap()).unwrap();
    match run_ladder(&LadderConfig { k: 1, ..LadderConfig::default() }) {
        Ok(result) => {
            assert_eq!(out.status.code(), Some(0));
            assert_eq!(rungs, result.rungs);
        }
        Err(LadderError::RungFailed { completed, .. }) => {
            assert_eq!(out.status.code(), Some(1));
            assert_eq!(rungs, completed.rungs);
            assert!(dir.path().join("failure.json").exists());
        }
        Err(e) => panic!("{e}"),
    }
}
