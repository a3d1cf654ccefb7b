use std::process::Command;

fn dirspeech() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dirspeech"))
}

const MANIFEST: &str = r#"{"schema":"dirspeech.eval/1","stage":"hand"}
{"id":"a","reference":"[case=one] <90°> TURN LEFT <eos>","prediction":"<90°> TURN LEFT <eos>","target_degrees":90,"direction_seen":true}
{"id":"b","reference":"[case=one] <-90°> GO HOME <eos>","prediction":"<-60°> GO HOME <eos>","target_degrees":-90,"direction_seen":true}
{"id":"c","reference":"[case=empty] <eos>","prediction":"[case=empty] <eos>","target_degrees":30,"direction_seen":true}
{"id":"d","reference":"[case=one] <0°> STOP <eos>","prediction":"0°: STOP","target_degrees":0,"direction_seen":false}
{"id":"e","reference":"[case=one] <0°> STOP <eos>","prediction":"<400°> STOP","target_degrees":0,"direction_seen":true}
"#;

#[test]
fn evaluate_reports_and_flags_unparseable() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("predictions.jsonl");
    std::fs::write(&m, MANIFEST).unwrap();
    let out = dirspeech().args(["--out"]).arg(dir.path()).args(["evaluate", "--manifest"]).arg(&m).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(out.status.code(), Some(2), "{stderr}");
    assert!(stderr.contains("e"), "{stderr}");
    assert!(stdout.contains("sWER"), "{stdout}");

    let out = dirspeech()
        .args(["--format", "structured", "--out"])
        .arg(dir.path())
        .args(["evaluate", "--manifest"])
        .arg(&m)
        .output()
        .unwrap();
    for line in String::from_utf8(out.stdout).unwrap().lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn missing_upstream_artifact_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dirspeech().args(["--out"]).arg(dir.path()).arg("beamform").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 1\nbogus = 2\n").unwrap();
    let out = dirspeech().args(["--out"]).arg(dir.path()).arg("--config").arg(&cfg).arg("smoke").output().unwrap();
    assert!(!out.status.success());
}
