use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_affinity"))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/eight")
}

fn text(out: &Output) -> (String, String) {
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn run_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("--config")
        .arg(fixture().join("config.json"))
        .arg("--out")
        .arg(dir.path())
        .arg("run")
        .output()
        .unwrap();
    let (stdout, stderr) = text(&out);
    assert!(out.status.success(), "{stderr}");
    assert!(stdout.contains("completed through evaluate"), "{stdout}");
    assert!(stdout.contains("team accuracy = "));
    assert!(dir.path().join("teams.csv").is_file());
    assert!(dir.path().join("memberships.csv").is_file());
}

#[test]
fn stage_command_stops_early() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("--config")
        .arg(fixture().join("config.json"))
        .arg("--out")
        .arg(dir.path())
        .arg("graphs")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(text(&out).0.contains("completed through graphs"));
    assert!(dir.path().join("graphs.json").is_file());
    assert!(!dir.path().join("association.csv").exists());
}

#[test]
fn missing_config_flag_exits_2() {
    let out = bin().arg("run").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out).1.contains("--config"));
}

#[test]
fn missing_embeddings_exit_1_with_stage_and_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture().join("survey.json"), dir.path().join("survey.json")).unwrap();
    fs::write(
        dir.path().join("config.json"),
        r#"{"survey": "survey.json", "embeddings": "missing.txt", "k": 2}"#,
    )
    .unwrap();
    let out = bin().arg("--config").arg(dir.path().join("config.json")).arg("run").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out).1;
    assert!(stderr.contains("[config]") && stderr.contains("missing.txt"), "{stderr}");
}

#[test]
fn synth_then_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["synth", "--candidates", "12", "--k", "fixed", "--clusters", "3", "--seed", "4", "--dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let config = dir.path().join("config.json");
    let run = |out: &str| {
        let o = bin().arg("--config").arg(&config).args(["--out", out, "run"]).current_dir(dir.path()).output().unwrap();
        assert!(o.status.success(), "{}", text(&o).1);
        fs::read(dir.path().join(out).join("association.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}
