//! The `gch` binary: exit codes, diagnostics and byte-determinism.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn gch(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gch"));
    cmd.args(args).env_remove("GCH_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn gch")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_RUN: &str = r#"{
  "grid.N": 2048,
  "solver.epsilon": 0.02,
  "solver.t_final": 0.5,
  "ic.kind": "peakon",
  "ic.params": {"c": 0.5, "x0": 0.0},
  "checks.enabled": ["h1", "l1", "bv", "linf", "time_bv", "p_bounds", "entropy"],
  "entropy.bumps": 3
}"#;

fn files_under(root: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    out.sort();
    out
}

fn without_wall_clock(text: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock_seconds");
    v.to_string()
}

#[test]
fn missing_config_exits_2_naming_the_path() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("absent.json");
    let out = gch(
        &[
            "run",
            "--config",
            &missing.to_string_lossy(),
            "--out",
            &tmp.path().join("o").to_string_lossy(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim().lines().count(), 1, "{err}");
    assert!(err.contains("absent.json"), "{err}");
}

#[test]
fn zero_viscosity_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"solver.epsilon": 0, "solver.t_final": 1.0}"#,
    );
    let out = gch(
        &[
            "run",
            "--config",
            &cfg,
            "--out",
            &tmp.path().join("o").to_string_lossy(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("viscosity must be positive"));
}

#[test]
fn unknown_key_and_bad_usage_exit_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"solver.t_final": 1.0, "solver.epsilom": 0.01}"#,
    );
    let out = gch(&["run", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(gch(&["frobnicate"], &[]).status.code(), Some(2));
    assert_eq!(gch(&["run"], &[]).status.code(), Some(2));
}

#[test]
fn failed_certification_exits_1() {
    // N = 512 leaves the entropy residuals above the 1e-6 tolerance
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", &SMALL_RUN.replace("2048", "512"));
    let o = tmp.path().join("o");
    let out = gch(
        &["run", "--config", &cfg, "--out", &o.to_string_lossy()],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("entropy: FAIL") && stdout.contains("h1: pass"),
        "{stdout}"
    );
}

#[test]
fn blowup_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"grid.N": 256, "solver.epsilon": 0.01, "solver.t_final": 0.2, "solver.blowup_ceiling": 1e-3}"#,
    );
    let o = tmp.path().join("o");
    let out = gch(
        &["run", "--config", &cfg, "--out", &o.to_string_lossy()],
        &[],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(o.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(m["exit_code"], 3);
}

#[test]
fn run_is_byte_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", SMALL_RUN);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = gch(
            &["run", "--config", &cfg, "--out", &dir.to_string_lossy()],
            &[],
        );
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let files = files_under(&a);
    assert_eq!(files, files_under(&b));
    assert_eq!(
        files
            .iter()
            .filter(|f| f.starts_with("reports/") && f.ends_with(".json"))
            .count(),
        6
    );
    assert!(files.contains(&"certification.json".to_string()));
    for f in &files {
        let (x, y) = (
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
        );
        if f == "run_manifest.json" {
            let (x, y) = (String::from_utf8(x).unwrap(), String::from_utf8(y).unwrap());
            assert_eq!(without_wall_clock(&x), without_wall_clock(&y));
        } else {
            assert!(x == y, "{f} differs between identical runs");
        }
    }
}

#[test]
fn manifest_hashes_match_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.json", SMALL_RUN);
    let o = tmp.path().join("o");
    assert_eq!(
        gch(
            &["run", "--config", &cfg, "--out", &o.to_string_lossy()],
            &[]
        )
        .status
        .code(),
        Some(0)
    );
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(o.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(
        m["input_hashes"]["config"],
        gch_core::io::sha256_file(Path::new(&cfg)).unwrap()
    );
    for entry in m["outputs"].as_array().unwrap() {
        let p = o.join(entry["path"].as_str().unwrap());
        assert_eq!(
            entry["sha256"].as_str().unwrap(),
            gch_core::io::sha256_file(&p).unwrap()
        );
    }
}

#[test]
fn certify_zero_trajectory_exits_0() {
    let tmp = TempDir::new().unwrap();
    let g = gch_core::Grid::new(40.0, 256).unwrap();
    let times: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let traj =
        gch_core::Trajectory::stationary(gch_core::GridFunction::zeros(g), 0.01, times).unwrap();
    let dir = tmp.path().join("zero");
    traj.save(&dir).unwrap();
    let o = tmp.path().join("o");
    let out = gch(
        &[
            "certify",
            "--trajectory",
            &dir.to_string_lossy(),
            "--out",
            &o.to_string_lossy(),
        ],
        &[],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(o.join("certification.json").exists());
}

#[test]
fn seed_flag_changes_the_bumps() {
    let tmp = TempDir::new().unwrap();
    let g = gch_core::Grid::new(40.0, 256).unwrap();
    let times: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let traj =
        gch_core::Trajectory::stationary(gch_core::GridFunction::zeros(g), 0.01, times).unwrap();
    let dir = tmp.path().join("zero");
    traj.save(&dir).unwrap();
    let read = |seed: &str, name: &str| {
        let o = tmp.path().join(name);
        let out = gch(
            &[
                "certify",
                "--trajectory",
                &dir.to_string_lossy(),
                "--seed",
                seed,
                "--out",
                &o.to_string_lossy(),
            ],
            &[],
        );
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(o.join("certification.json")).unwrap()
    };
    assert_eq!(read("42", "a"), read("42", "b"));
    assert_ne!(read("42", "c"), read("43", "d"));
}

#[test]
fn sweep_output_ignores_thread_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "s.json",
        r#"{"grid.N": 512, "solver.t_final": 0.4, "sweep.epsilons": [0.08, 0.04, 0.02], "checks.enabled": ["h1"]}"#,
    );
    let run = |threads: &str, name: &str| {
        let o = tmp.path().join(name);
        let out = gch(
            &["sweep", "--config", &cfg, "--out", &o.to_string_lossy()],
            &[("GCH_THREADS", threads)],
        );
        assert!(
            matches!(out.status.code(), Some(0) | Some(1)),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        (
            std::fs::read(o.join("sweep.json")).unwrap(),
            std::fs::read(o.join("cauchy.csv")).unwrap(),
        )
    };
    assert_eq!(run("0", "seq"), run("3", "par"));
}

#[test]
fn selftest_exits_0() {
    let out = gch(&["selftest"], &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}
