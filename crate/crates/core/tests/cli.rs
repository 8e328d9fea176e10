use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acc-ids"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run_to(cfg: &str, out: &Path) -> Output {
    bin()
        .args(["run", "--config"])
        .arg(config(cfg))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn run_writes_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to("acc_ids.toml", dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1001);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("theorem.json")).unwrap())
            .unwrap();
    assert_eq!(report["verdict"], "holds");
}

#[test]
fn check_theorem_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ids_dir = dir.path().join("ids");
    let kf_dir = dir.path().join("kf");
    assert!(run_to("acc_ids.toml", &ids_dir).status.success());
    assert!(run_to("kf_attack.toml", &kf_dir).status.success());

    let ok = bin()
        .args(["check-theorem", "--trace"])
        .arg(ids_dir.join("trace.csv"))
        .arg("--config")
        .arg(config("acc_ids.toml"))
        .output()
        .unwrap();
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stdout)
    );

    let bad = bin()
        .args(["check-theorem", "--trace"])
        .arg(kf_dir.join("trace.csv"))
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn seed_flag_changes_the_run_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let go = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let st = bin()
            .args(["run", "--config"])
            .arg(config("no_attack.toml"))
            .args(["--seed", seed, "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        std::fs::read(out.join("trace.csv")).unwrap()
    };
    assert_eq!(go("a", "7"), go("b", "7"));
    assert_ne!(go("a", "7"), go("c", "8"));
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["sweep", "--config"])
        .arg(config("accuracy_sweep.toml"))
        .args(["--grid", "0.5:1.0:0.25", "--repeats", "2", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("accuracy,time_to_crash,censored,seed"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "horizon = 10\nunknown_knob = true\n").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_knob"));

    std::fs::write(&bad, "initial_gap_ratio = 0.5\n").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // the sweep needs the backstop off
    let out = bin()
        .args(["sweep", "--config"])
        .arg(config("acc_ids.toml"))
        .args(["--grid", "0.1:1.0:0.1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
