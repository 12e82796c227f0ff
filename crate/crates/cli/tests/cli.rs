use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plnc-aloha")).args(args).current_dir(dir).output().unwrap()
}

const SMALL: &str =
    "code = \"qc-peg:8:1\"\nn_bc = 4\nsnr_db = [12.0]\nG = [0.4, 1.2]\ntrials = 8\nmax_iters = 30\n";

#[test]
fn validate_config_prints_the_full_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ok.toml"), SMALL).unwrap();
    let out = run(&["validate-config", "ok.toml", "--seed", "9"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 9"));
    assert!(text.contains("k_max = 7"));
}

#[test]
fn unknown_keys_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "S = 10\nslots_per_frame = 3\n").unwrap();
    let out = run(&["validate-config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("slots_per_frame"));
    let out = run(&["validate-config", "--set", "S"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn simulate_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), SMALL).unwrap();
    for (w, name) in [("1", "a.csv"), ("2", "b.csv")] {
        let out = run(&["simulate", "cfg.toml", "--workers", w, "--out", name, "--seed", "3"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("strategy,snr_db,G,"));
    assert_eq!(text.lines().count(), 1 + 2 * 6);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(meta["verb"], "simulate");
    assert_eq!(meta["config"]["seed"], 3);
}

#[test]
fn slot_study_and_bound_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), SMALL).unwrap();
    let out = run(
        &[
            "slot-study",
            "cfg.toml",
            "--set",
            "slot_k=[2]",
            "--set",
            "strategies=[\"jd\",\"snd-jd\"]",
            "--out",
            "slot.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("slot.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);

    let out = run(
        &[
            "bound",
            "cfg.toml",
            "--set",
            "ptilde_trials=20",
            "--set",
            "k_max=3",
            "--set",
            "repetition=\"bernoulli\"",
            "--out",
            "ub.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("ub.csv")).unwrap();
    assert!(text.starts_with("snr_db,G,phi_ub"));
    assert_eq!(text.lines().count(), 3);
}
