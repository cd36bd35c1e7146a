use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hypercells-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn hypercells(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hypercells")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn passing_run_exits_zero_and_writes_outputs() {
    let input = fixture("thrice-punctured-sphere");
    let (json, svg) = (tmp("tps.json"), tmp("tps.svg"));
    let (code, stdout, _) = hypercells(&[
        "--input",
        input.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("cross-validation"));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["passed"], true);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<?xml"));
}

#[test]
fn certificate_failure_exits_two() {
    let input = fixture("thrice-punctured-sphere");
    let (code, stdout, _) = hypercells(&["--input", input.to_str().unwrap(), "--word-bound", "0", "--algorithm", "ep"]);
    assert_eq!(code, 2);
    assert!(stdout.contains("FAIL"));
}

#[test]
fn input_errors_exit_three() {
    let (code, _, stderr) = hypercells(&["--input", "/definitely/not/here.json"]);
    assert_eq!(code, 3);
    assert!(stderr.contains("cannot read"));

    let text = std::fs::read_to_string(fixture("thrice-punctured-sphere")).unwrap();
    let bad = tmp("dim5.json");
    std::fs::write(&bad, text.replacen("\"dimension\": 2", "\"dimension\": 5", 1)).unwrap();
    let (code, _, stderr) = hypercells(&["--input", bad.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(stderr.contains("unsupported dimension"), "{stderr}");

    let input = fixture("figure-eight");
    let (code, _, stderr) = hypercells(&["--input", input.to_str().unwrap(), "--svg", tmp("f8.svg").to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(stderr.contains("dimension 2"));
}

#[test]
fn non_involutive_reflection_is_named() {
    let text = std::fs::read_to_string(fixture("thrice-punctured-sphere")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["reflections"] = serde_json::json!([[[1, 0, 0], [0, 1, 0], [0, 0, 1]], [[2, 0, 0], [0, 1, 0], [0, 0, 1]]]);
    let bad = tmp("reflection.json");
    std::fs::write(&bad, doc.to_string()).unwrap();
    let (code, _, stderr) = hypercells(&["--input", bad.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(stderr.contains("reflections["), "{stderr}");
}
