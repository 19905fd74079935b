use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn timeblur(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timeblur"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = timeblur(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

fn synth(dir: &Path, name: &str) {
    ok(dir, &["synth", "--users", "30", "--pois", "3", "--seed", "7", "-o", name]);
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = ok(dir.path(), &["synth", "--users", "100", "--pois", "3", "--seed", "7", "-o", "a.csv", "--truth", "ta.csv"]);
    ok(dir.path(), &["synth", "--users", "100", "--pois", "3", "--seed", "7", "-o", "b.csv", "--truth", "tb.csv"]);
    assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(fs::read(dir.path().join("ta.csv")).unwrap(), fs::read(dir.path().join("tb.csv")).unwrap());
    assert_eq!(a["seed"], 7);
    assert_eq!(a["metrics"]["plantedPois"], 300);
    assert_eq!(a["params"]["spec"]["userCount"], 100);
}

#[test]
fn anonymize_promesse_writes_output_and_report() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "in.csv");
    let r = ok(
        dir.path(),
        &["anonymize", "--mechanism", "promesse", "--epsilon", "200", "-i", "in.csv", "-o", "out.csv", "--report", "run.json"],
    );
    assert_eq!(r["command"], "anonymize");
    assert!(r["durationMs"].as_f64().unwrap() >= 0.0);
    let out_records = r["outputRecords"].as_u64().unwrap();
    assert!(out_records > 0 && out_records < r["inputRecords"].as_u64().unwrap());
    let text = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert!(text.starts_with("user,timestamp,lat,lon\n"));
    assert_eq!(text.lines().count() as u64, out_records + 1);
    let saved: Value = serde_json::from_slice(&fs::read(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(saved, r);
}

#[test]
fn geoind_output_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "in.csv");
    for (threads, out) in [("1", "one.csv"), ("4", "four.csv")] {
        let r = ok(
            dir.path(),
            &["--threads", threads, "anonymize", "--mechanism", "geoind", "--epsilon", "ln(2)/200", "--seed", "5", "-i", "in.csv", "-o", out],
        );
        assert_eq!(r["seed"], 5);
        assert_eq!(r["metrics"]["compression"], 1.0);
    }
    assert_eq!(fs::read(dir.path().join("one.csv")).unwrap(), fs::read(dir.path().join("four.csv")).unwrap());
}

#[test]
fn eval_reports_metrics_without_touching_inputs() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "in.csv");
    ok(dir.path(), &["anonymize", "--mechanism", "promesse", "--epsilon", "200", "-i", "in.csv", "-o", "p.csv"]);
    let before = (fs::read(dir.path().join("in.csv")).unwrap(), fs::read(dir.path().join("p.csv")).unwrap());
    let pair = ["--original", "in.csv", "--protected", "p.csv"];

    let f = ok(dir.path(), &[&["eval", "fscore"][..], &pair].concat());
    assert!(f["metrics"]["fscore"].as_f64().unwrap() <= 0.03);
    assert_eq!(f["params"]["ell"], 100.0);
    let s = ok(dir.path(), &[&["eval", "spatial-error"][..], &pair].concat());
    assert!(s["metrics"]["spatialError"].as_f64().unwrap() <= 0.5);
    let q = ok(dir.path(), &[&["eval", "range-queries", "--queries", "50", "--seed", "2"][..], &pair].concat());
    assert!(q["metrics"]["queryDistortion"].as_f64().unwrap() >= 0.0);
    assert_eq!(q["seed"], 2);
    let c = ok(dir.path(), &[&["eval", "compression"][..], &pair].concat());
    assert!(c["metrics"]["compression"].as_f64().unwrap() < 1.0);

    let after = (fs::read(dir.path().join("in.csv")).unwrap(), fs::read(dir.path().join("p.csv")).unwrap());
    assert_eq!(before, after);
}

#[test]
fn attack_and_preprocess() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "in.csv");
    let a = ok(dir.path(), &["attack", "pois", "-i", "in.csv", "-o", "pois.csv"]);
    assert_eq!(a["metrics"]["pois"], 90);
    let pois = fs::read_to_string(dir.path().join("pois.csv")).unwrap();
    assert!(pois.starts_with("user,lat,lon,start,end,count\n"));
    assert_eq!(pois.lines().count(), 91);

    let p = ok(dir.path(), &["preprocess", "-i", "in.csv", "-o", "pre.csv", "--max-gap", "3600"]);
    assert_eq!(p["inputRecords"], p["outputRecords"]);
    assert_eq!(p["metrics"]["outputUsers"], 30);
    assert!(fs::read_to_string(dir.path().join("pre.csv")).unwrap().contains("u0000-0,"));
}

#[test]
fn bench_reports_timing() {
    let dir = tempfile::tempdir().unwrap();
    let r = ok(dir.path(), &["bench", "--mechanism", "promesse", "--epsilon", "200", "--records", "20000"]);
    assert!(r["inputRecords"].as_u64().unwrap() >= 20_000);
    assert!(r["durationMs"].as_f64().unwrap() > 0.0);
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "user,timestamp,lat,lon\na,1,45,5\na,2,95,5\n").unwrap();
    let cases: [&[&str]; 4] = [
        &["eval", "compression", "--original", "missing.csv", "--protected", "missing.csv"],
        &["anonymize", "--mechanism", "promesse", "--epsilon", "200", "-i", "bad.csv", "-o", "o.csv"],
        &["anonymize", "--mechanism", "geoind", "--epsilon", "ln(1)/200", "-i", "bad.csv", "-o", "o.csv"],
        &["synth", "--bogus"],
    ];
    for args in cases {
        let out = timeblur(dir.path(), args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
    let out = timeblur(dir.path(), cases[1]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}
