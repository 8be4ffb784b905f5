//! End-to-end checks of the binary: golden fixture emission, round trips,
//! exit-code conventions, and idempotent structured output.

use std::path::Path;
use std::process::{Command, Output};

fn colarb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colarb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn fixture_emission_matches_golden_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.json");
    let out = colarb(&["fixtures", "emit", "--name", "fig1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let emitted = std::fs::read(&path).unwrap();
    let golden = std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/fig1.json"))
        .unwrap();
    assert_eq!(emitted, golden, "emitted fixture drifted from the golden copy");
}

#[test]
fn every_fixture_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fig1", "twin-complete", "ca-pair", "zero-market"] {
        let path = dir.path().join(format!("{name}.json"));
        let emit = colarb(&["fixtures", "emit", "--name", name, "--out", path.to_str().unwrap()]);
        assert!(emit.status.success());
        let check = colarb(&["validate", "--model", path.to_str().unwrap()]);
        assert!(check.status.success());
        assert!(stdout(&check).contains("status: valid"), "{name}");
    }
}

#[test]
fn invalid_model_is_a_finding_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    // Zero mass on one outcome: structurally parseable, semantically broken.
    let text = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/fig1.json"),
    )
    .unwrap();
    let broken = text.replacen("\"1/8\"", "\"0\"", 1).replacen(
        "\"1/8\",\n    \"1/8\",\n    \"1/8\",\n    \"1/8\",\n    \"1/8\",\n    \"1/8\",\n    \"1/8\"",
        "\"1/4\",\n    \"1/8\",\n    \"1/8\",\n    \"1/8\",\n    \"1/8\",\n    \"1/8\",\n    \"1/8\"",
        1,
    );
    std::fs::write(&path, broken).unwrap();
    let out = colarb(&["validate", "--model", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "negative findings are exit 0");
    assert!(stdout(&out).contains("status: invalid"));
    assert!(stdout(&out).contains("measure_not_equivalent"));
}

#[test]
fn unreadable_input_exits_two() {
    let out = colarb(&["validate", "--model", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(2));
    // Unknown fixture names are input errors too.
    let out = colarb(&["fixtures", "emit", "--name", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    // Bad region parameters as well.
    let out = colarb(&["cara-region", "--q1", "1/4", "--q2", "1/2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn structured_reports_reserialize_byte_stably() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.json");
    colarb(&["fixtures", "emit", "--name", "fig1", "--out", path.to_str().unwrap()]);
    for verb in ["validate", "minimax", "beneficial"] {
        let out = colarb(&[verb, "--model", path.to_str().unwrap(), "--format", "structured"]);
        assert!(out.status.success());
        let line = stdout(&out);
        let line = line.trim();
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(serde_json::to_string(&value).unwrap(), line, "{verb}");
    }
}

#[test]
fn beneficial_reports_certificate_on_the_tree_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.json");
    colarb(&["fixtures", "emit", "--name", "fig1", "--out", path.to_str().unwrap()]);
    let out = colarb(&["beneficial", "--model", path.to_str().unwrap(), "--format", "structured"]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(value["status"], "certificate");
    assert_eq!(value["payload"]["certificate"]["strict"], true);

    let path2 = dir.path().join("twin.json");
    colarb(&["fixtures", "emit", "--name", "twin-complete", "--out", path2.to_str().unwrap()]);
    let out = colarb(&["beneficial", "--model", path2.to_str().unwrap(), "--format", "structured"]);
    assert!(out.status.success(), "absence is still exit 0");
    let value: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(value["status"], "absent");
}

#[test]
fn minimax_prints_exact_tree_measures() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.json");
    colarb(&["fixtures", "emit", "--name", "fig1", "--out", path.to_str().unwrap()]);
    let out = colarb(&["minimax", "--model", path.to_str().unwrap()]);
    let text = stdout(&out);
    assert!(text.contains(r#""1/8", "3/8", "1/12""#));
    assert!(text.contains("33/125"));
    assert!(text.contains("89/500"));
}
