use std::path::PathBuf;
use std::process::Command;

fn qsweep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qsweep"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn profile_run_exits_cleanly() {
    let out = tempfile::tempdir().unwrap();
    let status = qsweep()
        .args(["profile", "--threads", "2", "--config"])
        .arg(config("fig2.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.path().join("manifest.json").exists());
}

#[test]
fn bad_input_exits_with_one() {
    let out = tempfile::tempdir().unwrap();
    // fig2 has deterministic attenuation and no trajectory section
    let status = qsweep()
        .args(["trajectories", "--config"])
        .arg(config("fig2.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    let status = qsweep()
        .args(["verify", "--config", "/nonexistent.toml", "--out"])
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn failed_verification_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("verify.toml"))
        .unwrap()
        .replace(
            "coherence = [\"coherent\"]",
            "coherence = [\"coherent\", \"incoherent\"]",
        )
        .replace("points_per_time = 3334", "points_per_time = 300");
    let path = dir.path().join("v.toml");
    std::fs::write(&path, text).unwrap();
    let status = qsweep()
        .args(["verify", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
