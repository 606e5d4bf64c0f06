use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn camoforge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_camoforge"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn camoforge")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json stdout")
}

#[test]
fn lock_then_attack_recovers_a_correct_key() {
    let dir = tempfile::tempdir().unwrap();
    let lock = json(&camoforge(
        dir.path(),
        &["lock", "c432", "--keys", "12", "--seed", "5", "-o", "l.bench"],
    ));
    assert_eq!(lock["key_bits"], 12);
    assert!(dir.path().join("l.bench.key.json").exists());
    for kind in ["sat", "2dip", "psat"] {
        let r = json(&camoforge(
            dir.path(),
            &["attack", "l.bench", "--kind", kind, "--samples", "20", "--trace"],
        ));
        assert_eq!(r["status"], "success", "{kind}");
        assert_eq!(r["key_correct"], true, "{kind}");
        assert_eq!(r["oer"], 0.0, "{kind}");
        assert_eq!(
            r["trace"].as_array().unwrap().len() as u64,
            r["iterations"].as_u64().unwrap()
        );
    }
}

#[test]
fn lock_without_output_names_files_after_input() {
    let dir = tempfile::tempdir().unwrap();
    let lock = json(&camoforge(dir.path(), &["lock", "c17", "--keys", "3", "--seed", "7"]));
    assert_eq!(lock["netlist"], "c17_locked.bench");
    assert!(dir.path().join("c17_locked.bench.key.json").exists());
    let r = json(&camoforge(dir.path(), &["attack", "c17_locked.bench", "--kind", "sat"]));
    assert_eq!(r["key_correct"], true);
}

#[test]
fn annotated_netlist_round_trips_through_pragmas() {
    let dir = tempfile::tempdir().unwrap();
    json(&camoforge(dir.path(), &["lock", "c17", "--keys", "3", "-o", "l.bench"]));
    let a = json(&camoforge(
        dir.path(),
        &[
            "annotate",
            "l.bench",
            "--key",
            "l.bench.key.json",
            "--fraction",
            "0.5",
            "-o",
            "p.bench",
        ],
    ));
    assert!(a["annotations"].as_u64().unwrap() > 0);
    let p = json(&camoforge(dir.path(), &["parse", "p.bench"]));
    assert_eq!(p["pragmas"], a["annotations"]);
    assert_eq!(p["round_trip"], true);
    let s = json(&camoforge(
        dir.path(),
        &[
            "simulate",
            "p.bench",
            "--key",
            "p.bench.key.json",
            "--input",
            "10101",
            "--samples",
            "500",
        ],
    ));
    let hist = s["results"][0]["histogram"].as_array().unwrap();
    let total: u64 = hist.iter().map(|h| h["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 500);
}

#[test]
fn campaign_reports_convert_between_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = camoforge(
        dir.path(),
        &[
            "campaign", "c17", "--keys", "3", "--runs", "3", "--format", "csv", "-o", "r.csv",
        ],
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let j = json(&camoforge(dir.path(), &["report", "r.csv", "--format", "json-like"]));
    assert_eq!(j["runs"], 3);
    assert_eq!(j["success_rate"], 1.0);
    assert_eq!(j["records"].as_array().unwrap().len(), 3);
}

#[test]
fn device_prints_operating_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = camoforge(dir.path(), &["device"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let field = |k: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(&format!("{k} "))).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!((field("read_power_with_leakage_uW") - 0.2125).abs() < 0.002);
    assert_eq!(field("correctness"), 1.0);
    assert_eq!(text.lines().filter(|l| l.starts_with("primitive ")).count(), 3);
}

#[test]
fn adder_study_reports_error_bound() {
    let dir = tempfile::tempdir().unwrap();
    let r = json(&camoforge(dir.path(), &["adder-study", "--flip-width", "5"]));
    assert_eq!(r["error_bound_pct"], "0.000024%");
    assert_eq!(r["flip_check"]["within_bound"], true);
}

#[test]
fn hybrid_keeps_critical_delay() {
    let dir = tempfile::tempdir().unwrap();
    let r = json(&camoforge(dir.path(), &["hybrid", "skewed"]));
    assert!(r["selected"].as_u64().unwrap() > 0);
    assert_eq!(r["critical_s"], r["original_critical_s"]);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["frobnicate"][..],
        &["lock", "c17"],
        &["attack", "x.bench", "--solver", "minisat"],
        &["attack", "x.bench", "--kind", "quantum"],
        &["lock", "c17", "--keys", "1000", "-o", "o.bench"],
        &["campaign", "c17", "--format", "xml"],
        &["campaign", "c17", "--prob-fraction", "0.1", "--poly-fraction", "0.1"],
    ] {
        let out = camoforge(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.bench"), "INPUT(a\n").unwrap();
    std::fs::write(dir.path().join("ok.bench"), "INPUT(a)\nOUTPUT(b)\nb = NOT(a)\n").unwrap();
    std::fs::write(dir.path().join("ok.bench.key.json"), "{ not json").unwrap();
    for args in [
        &["parse", "missing.bench"][..],
        &["parse", "bad.bench"],
        &["attack", "ok.bench"],
        &["device", "--params", "missing.txt"],
        &["report", "ok.bench"],
    ] {
        let out = camoforge(dir.path(), args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
    }
}
