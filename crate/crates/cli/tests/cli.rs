use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn moebius(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_moebius"))
        .args(args)
        .output()
        .expect("binary runs");
    let code = out.status.code().expect("exit code");
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    let doc = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (code, doc, String::from_utf8_lossy(&out.stderr).to_string())
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn fixture(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(format!("{name}.json"));
    let p = path.to_str().unwrap();
    let mut args = vec!["fixture", name, "--out", p];
    args.extend_from_slice(extra);
    let (code, _, err) = moebius(&args);
    assert_eq!(code, 0, "{err}");
    p.to_string()
}

#[test]
fn fixture_roundtrips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "extended-line", &["--size", "5"]);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(written["schema_version"], 1);
    assert_eq!(written["result"]["space"]["infinity"], "inf");
    let (code, doc, _) = moebius(&["--input", &p, "validate"]);
    assert_eq!(code, 0);
    assert_eq!(doc["status"], "pass");
    assert_eq!(doc["config"]["mode"], "exact");
    assert_eq!(doc["config"]["input"], p.as_str());
}

#[test]
fn crt_of_a_line_quadruple() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "integer-line", &["--size", "4"]);
    // (d01·d23 : d02·d31 : d03·d12) = (1 : 4 : 3)
    let (code, doc, _) = moebius(&["--input", &p, "crt", "--quad", "0,1,2,3"]);
    assert_eq!(code, 0);
    assert_eq!(doc["result"]["crt"], serde_json::json!(["1/8", "1/2", "3/8"]));
    assert_eq!(doc["result"]["ratio"], serde_json::json!(["4/3", "3", "1/4"]));
}

#[test]
fn asymmetric_space_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.csv", "a,b,c\n0,1,2\n1,0,1\n2,5,0\n");
    let (code, doc, _) = moebius(&["--input", p.to_str().unwrap(), "validate"]);
    assert_eq!(code, 1);
    assert_eq!(doc["result"]["witnesses"][0]["property"], "symmetry");
}

#[test]
fn axioms_pass_on_metrics_and_fail_on_inconsistent_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "random-metric", &["--size", "5", "--seed", "3"]);
    let (code, doc, _) = moebius(&["--input", &p, "axioms"]);
    assert_eq!(code, 0, "{doc}");
    // Swapping the first two points negates and reorders; storing the same
    // value for both is inconsistent.
    let table = r#"{"points": ["a","b","c","d"], "entries": [
        {"quad": ["a","b","c","d"], "M": [0.5, 0.25, -0.75]},
        {"quad": ["b","a","c","d"], "M": [0.5, 0.25, -0.75]}]}"#;
    let t = write(dir.path(), "table.json", table);
    let (code, doc, _) = moebius(&["--input", t.to_str().unwrap(), "axioms"]);
    assert_eq!(code, 1, "{doc}");
    assert_eq!(doc["status"], "fail");
}

#[test]
fn derived_and_involuted_spaces_feed_back_in() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "random-metric", &["--size", "5", "--seed", "1"]);
    let out = dir.path().join("da.json");
    let (code, _, err) = moebius(&["--input", &p, "--out", out.to_str().unwrap(), "derive-da", "--base", "p0,p1,p2"]);
    assert_eq!(code, 0, "{err}");
    let (code, doc, _) = moebius(&["--input", out.to_str().unwrap(), "validate"]);
    assert_eq!(code, 0, "{doc}");
    let (code, doc, _) = moebius(&["--input", &p, "verify-da", "--base", "p0,p1,p2"]);
    assert_eq!(code, 0, "{doc}");
    let (code, doc, _) = moebius(&["--input", &p, "involute", "--point", "p3"]);
    assert_eq!(code, 0);
    assert_eq!(doc["result"]["space"]["infinity"], "p3");
}

#[test]
fn condition_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "extended-line", &["--size", "5"]);
    let (code, doc, _) = moebius(&["--input", &p, "quasi-k"]);
    assert_eq!(code, 0);
    assert_eq!(doc["result"]["K_estimate"], 2.0);
    let (code, doc, _) = moebius(&["--input", &p, "corner"]);
    assert_eq!(code, 0);
    assert!(doc["result"]["margin"].as_f64().unwrap() >= 0.25);
    let (code, doc, _) = moebius(&["--input", &p, "symmetry"]);
    assert_eq!(code, 0);
    assert!(doc["result"]["note"].as_str().unwrap().contains("empirical"));
    let (code, doc, _) = moebius(&["--input", &p, "boundedify", "--zeta0", "2"]);
    assert_eq!(code, 0);
    assert!(doc["result"]["space"].get("infinity").is_none());
}

#[test]
fn sequence_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "punctured-interval", &["--size", "20"]);
    let (code, doc, _) = moebius(&["--input", &p, "cauchy", "--ambient", "line", "--sequence", "reciprocal"]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["result"]["verdicts"][0]["classification"], "bounded-cauchy");
    let (code, doc, _) = moebius(&[
        "--input", &p, "--horizon", "2000", "cauchy", "--ambient", "line", "--sequence", "alt=table:1/4;3/4;1/4;3/4",
        "--sequence", "linear:1,0",
    ]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["result"]["verdicts"][1]["classification"], "divergent");
    let (code, doc, _) = moebius(&[
        "--input", &p, "adjoin", "--ambient", "line", "--closed-form", "--sequence", "zero=reciprocal",
    ]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["result"]["space"]["points"][20], "zero");
    let (code, doc, _) = moebius(&[
        "--input", &p, "equivalent", "--ambient", "line", "--sequence", "reciprocal", "--sequence", "linear:0,1",
    ]);
    assert_eq!(code, 1, "{doc}");
    assert_eq!(doc["result"]["equivalent"], false);
}

#[test]
fn finite_table_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "random-metric", &["--size", "6", "--seed", "2"]);
    let (code, doc, _) = moebius(&["--input", &p, "--horizon", "100", "adjoin", "--sequence", "t=table:p1;p3;p2"]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["result"]["report"]["points"][0]["outcome"], "existing");
    assert_eq!(doc["result"]["space"]["points"].as_array().unwrap().len(), 6);
}

#[test]
fn float_mode_on_the_circle() {
    let (code, doc, _) = moebius(&[
        "--mode", "float", "cauchy", "--ambient", "circle", "--anchors", "1,2,1.5,2.5", "--sequence",
        "alternating-reciprocal",
    ]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["config"]["mode"], "float");
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture(dir.path(), "integer-line", &["--size", "4"]);
    let (code, doc, err) = moebius(&["--input", &p, "crt", "--quad", "0,1,2,9"]);
    assert_eq!(code, 2);
    assert_eq!(doc["status"], "error");
    assert!(err.contains("unknown point label"));
    let (code, _, _) = moebius(&["--input", "/nonexistent.json", "validate"]);
    assert_eq!(code, 2);
    let (code, _, _) = moebius(&["--input", &p, "crt", "--quad", "0,1,2"]);
    assert_eq!(code, 2);
    let (code, _, _) = moebius(&["--input", &p, "equivalent", "--sequence", "table:0"]);
    assert_eq!(code, 2);
    let (code, _, _) = moebius(&["--input", &p, "cauchy", "--sequence", "reciprocal"]);
    assert_eq!(code, 2);
    let bad = write(dir.path(), "bad.json", r#"{"points": ["a", "b"], "matrix": [[0, "x"], [1, 0]]}"#);
    let (code, _, err) = moebius(&["--input", bad.to_str().unwrap(), "validate"]);
    assert_eq!(code, 2);
    assert!(err.contains("matrix[0][1]"), "{err}");
}
