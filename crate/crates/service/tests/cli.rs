use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn nlcompose(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_nlcompose")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn gen_vectors_reproduces_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.txt");
    nlcompose(&["gen-vectors", "--out", out.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(fs::read(out).unwrap(), fs::read(fixtures().join("vectors50.txt")).unwrap());
}

#[test]
fn compose_replays_the_transcript() {
    let f = fixtures();
    let stdout = nlcompose(&[
        "compose",
        "--script",
        f.join("plan_a_trip.script").to_str().unwrap(),
        "--manifests",
        f.join("manifests").to_str().unwrap(),
        "--vectors",
        f.join("vectors50.txt").to_str().unwrap(),
    ]);
    assert_eq!(stdout, fs::read_to_string(f.join("plan_a_trip.expected.jsonl")).unwrap());
}

#[test]
fn match_prints_ranking_then_outcome() {
    let f = fixtures();
    let stdout = nlcompose(&[
        "match",
        "will it rain in London",
        "--manifests",
        f.join("manifests").to_str().unwrap(),
        "--vectors",
        f.join("vectors50.txt").to_str().unwrap(),
    ]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].ends_with("Weather.getForecast"), "{stdout}");
    let outcome: serde_json::Value = serde_json::from_str(lines.last().unwrap()).unwrap();
    assert_eq!(outcome["outcome"], "Selected");
    assert_eq!(outcome["candidates"]["method_id"], "getForecast", "{outcome}");
}

#[test]
fn bench_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    nlcompose(&["bench", "--counts", "5,50", "--reps", "2", "--out", out.to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["mode"], "sequential");
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["n_services"], 50);
    assert_eq!(rows[0]["samples"].as_array().unwrap().len(), 10);
}
