use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.json")
}

fn rqfarm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rqfarm")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn solve_then_simulate_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = config();
    let cfg = cfg.to_str().unwrap();
    let out = rqfarm(&["solve", "--config", cfg, "--restarts", "4", "--out", d]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["policy.json", "diagnostics.json", "diagnostics.tsv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let policy = dir.path().join("policy.json");
    let p = policy.to_str().unwrap();
    assert_eq!(code(&rqfarm(&["check", "--config", cfg, "--policy", p])), 0);

    let sim = |sub: &str| {
        let o = dir.path().join(sub);
        let out = rqfarm(&[
            "simulate", "--config", cfg, "--policy", p, "--horizon", "2000", "--replications", "2", "--seed", "5",
            "--out", o.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        fs::read_to_string(o.join("metrics.json")).unwrap()
    };
    assert_eq!(sim("a"), sim("b"));
    assert!(dir.path().join("a/metrics.tsv").exists());
}

#[test]
fn infeasible_sla_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let out = rqfarm(&[
        "solve", "--config", cfg.to_str().unwrap(), "--delta", "1", "--epsilon", "0.1", "--restarts", "4", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let text = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    assert!(text.contains("1.46"), "{text}");
}

#[test]
fn errors_exit_one() {
    assert_eq!(code(&rqfarm(&["solve"])), 1);
    assert_eq!(code(&rqfarm(&["solve", "--config", "/nonexistent.json"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    let cfg = config();
    let out = rqfarm(&[
        "simulate", "--config", cfg.to_str().unwrap(), "--policy", empty.to_str().unwrap(), "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert_eq!(code(&rqfarm(&["--help"])), 0);
}

#[test]
fn verify_and_negative_control() {
    assert_eq!(code(&rqfarm(&["verify", "--draws", "40"])), 0);
    let out = rqfarm(&["verify", "--draws", "40", "--flip-constant-sign"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
