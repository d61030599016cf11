use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn sqg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqg")).current_dir(dir).args(args).env_remove("SQG_GOLDEN_DIR").output().unwrap()
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn tiny() -> String {
    repo_root().join("configs/tiny.toml").display().to_string()
}

const MINIMAL: &str = r#"
[domain]
shape = "rectangle"
lx = 1.0
ly = 1.0

[truncation]
mx = 8
my = 8

[solver]
epsilon = 0.0
dt = 1e-3
t_end = 1e-2
record_stride = 5

[initial]
kind = "single_mode"
index = 0
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_simulation_writes_three_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), MINIMAL);
    let o = sqg(tmp.path(), &["simulate", "--config", &cfg, "--out", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&tmp.path().join("out"));
    let arts = m["artifacts"].as_array().unwrap();
    assert_eq!(arts.len(), 3);
    for a in arts {
        let bytes = fs::read(tmp.path().join("out").join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
    let csv = fs::read_to_string(tmp.path().join("out/trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,l2,linf,h_half,energy_residual"));
    assert_eq!(csv.lines().count(), 4);
    assert!(m["timings"]["solve"].as_f64().is_some());
}

#[test]
fn unknown_config_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &MINIMAL.replace("record_stride = 5", "record_strid = 5"));
    let o = sqg(tmp.path(), &["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("record_strid") && e.contains("line"), "{e}");
}

#[test]
fn missing_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(sqg(tmp.path(), &["simulate"]).status.code(), Some(2));
    assert_eq!(sqg(tmp.path(), &["simulate", "--config", "absent.toml"]).status.code(), Some(2));
}

#[test]
fn deterministic_reruns_have_identical_checksums() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &MINIMAL.replace("index = 0", "index = 3"));
    for out in ["a", "b"] {
        let o = sqg(tmp.path(), &["simulate", "--deterministic", "--config", &cfg, "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (a, b) = (manifest(&tmp.path().join("a")), manifest(&tmp.path().join("b")));
    assert_eq!(a["artifacts"], b["artifacts"]);
    assert_eq!(a["config_sha256"], b["config_sha256"]);
}

#[test]
fn solver_abort_dumps_state_and_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MINIMAL
        .replace("dt = 1e-3", "dt = 0.5\nmax_halvings = 0\nt_end = 1.0")
        .replace("t_end = 1e-2\n", "")
        .replace("kind = \"single_mode\"\nindex = 0", "kind = \"random_band_limited\"\nkmax = 20.0\nl2 = 50.0");
    let cfg = write_config(tmp.path(), &text);
    let o = sqg(tmp.path(), &["simulate", "--config", &cfg, "--out", "out"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(tmp.path().join("out/abort_state.sqgf").is_file());
    assert!(stderr(&o).contains("aborted"));
}

#[test]
fn barrier_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sqg(tmp.path(), &["verify", "--suite", "barrier", "--out", "v"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("PASS barrier: barrier lemma"));
    assert!(tmp.path().join("v/verify_barrier.json").is_file());
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sqg(tmp.path(), &["verify", "--suite", "everything"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("everything"));
}

#[test]
fn full_suite_on_tiny_config_is_fast_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let o = sqg(tmp.path(), &["verify", "--suite", "all", "--deterministic", "--config", &tiny(), "--out", "a"]);
    assert!(t0.elapsed() < Duration::from_secs(300));
    assert_eq!(o.status.code(), Some(0), "{}\n{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let o = sqg(tmp.path(), &["verify", "--suite", "all", "--deterministic", "--config", &tiny(), "--out", "b"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(manifest(&tmp.path().join("a"))["artifacts"], manifest(&tmp.path().join("b"))["artifacts"]);
}

#[test]
fn holder_without_trajectory_needs_inline() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sqg(tmp.path(), &["holder", "--config", &tiny(), "--out", "h"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("index.csv"));
}

#[test]
fn holder_reads_simulated_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sqg(tmp.path(), &["simulate", "--config", &tiny(), "--out", "run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stored = sqg(tmp.path(), &["holder", "--config", &tiny(), "--out", "run"]);
    assert_eq!(stored.status.code(), Some(0), "{}", stderr(&stored));
    let inline = sqg(tmp.path(), &["holder", "--inline", "--config", &tiny(), "--out", "inline"]);
    assert_eq!(inline.status.code(), Some(0));
    let read = |d: &str| fs::read_to_string(tmp.path().join(d).join("oscillation.csv")).unwrap();
    assert_eq!(read("run"), read("inline"));
}

#[test]
fn holder_alpha_in_golden_range() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sqg"))
        .current_dir(tmp.path())
        .args(["holder", "--inline", "--config", &tiny(), "--out", "h"])
        .env("SQG_GOLDEN_DIR", repo_root().join("goldens"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("h/holder_report.json")).unwrap()).unwrap();
    assert!(rep["report"]["metrics"]["golden_alpha_min"].is_number());
    assert_eq!(rep["report"]["pass"], true);
}

#[test]
fn constant_data_gives_regular_sentinel() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MINIMAL.replace("kind = \"single_mode\"\nindex = 0", "kind = \"zero\"");
    let cfg = write_config(tmp.path(), &text);
    let o = sqg(tmp.path(), &["holder", "--inline", "--config", &cfg, "--out", "h"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("alpha = inf"));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("h/holder_report.json")).unwrap()).unwrap();
    assert_eq!(rep["regular"], true);
    assert!(rep["alpha"].is_null());
}
