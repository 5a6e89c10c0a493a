use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qotp-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qotp-lab-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn passing_suite_exits_zero_and_writes_report() {
    let dir = scratch("ok");
    let out = bin().args(["twirl-check", "--seed", "5", "--out"]).arg(&dir).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS twirl_max_deviation"));
    let report = std::fs::read_to_string(dir.join("twirl-check.json")).unwrap();
    assert!(report.contains("\"seed\": 5"));
    assert!(dir.join("twirl-check.timing.json").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failing_check_exits_one() {
    let dir = scratch("fail");
    let config = dir.join("c.json");
    std::fs::write(&config, r#"{"command":"twirl-check","samples":{"unitaries":2},"tolerances":{"twirl":-1.0}}"#).unwrap();
    let out = bin().arg("twirl-check").arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn configuration_errors_exit_two() {
    let dir = scratch("bad");
    let config = dir.join("c.json");
    std::fs::write(&config, r#"{"command":"brotp-check"}"#).unwrap();
    let mismatch = bin().arg("twirl-check").arg("--config").arg(&config).output().unwrap();
    assert_eq!(mismatch.status.code(), Some(2));
    let unknown = bin().arg("warp-drive").output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
    std::fs::write(&config, "{not json").unwrap();
    let malformed = bin().arg("brotp-check").arg("--config").arg(&config).output().unwrap();
    assert_eq!(malformed.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
