use std::fs;
use std::process::{Command, Output};

use biosec::presets;

fn biosec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biosec")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn enroll_then_authenticate() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.json");
    let t = t.to_str().unwrap();
    let o = biosec(&["--preset", "sidebar-b", "enroll", "--input", "1011", "--out", t]);
    assert!(o.status.success(), "{o:?}");
    assert!(fs::read_to_string(t).unwrap().contains("\"syndrome\": \"10\""));
    assert_eq!(biosec(&["--preset", "sidebar-b", "auth", "--template", t, "--probe", "0101"]).status.code(), Some(0));
    assert_eq!(biosec(&["--preset", "sidebar-b", "auth", "--template", t, "--probe", "1111"]).status.code(), Some(1));
}

#[test]
fn keyed_enrollment_writes_and_reuses_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"architecture": "cancelable", "n": 8, "tau": 0.125}"#).unwrap();
    let (cfg, key, t) = (cfg.to_str().unwrap(), dir.path().join("k.json"), dir.path().join("t.json"));
    let (key, t) = (key.to_str().unwrap(), t.to_str().unwrap());
    let o = biosec(&["--config", cfg, "enroll", "--input", "10110011", "--key", key, "--out", t]);
    assert!(o.status.success(), "{o:?}");
    let auth = |probe: &str| biosec(&["--config", cfg, "auth", "--template", t, "--probe", probe, "--key", key]).status.code();
    assert_eq!(auth("10110011"), Some(0));
    assert_eq!(auth("10110010"), Some(0));
    assert_eq!(auth("01001100"), Some(1));
    // without the key the request is malformed, not a reject
    assert_eq!(biosec(&["--config", cfg, "auth", "--template", t, "--probe", "10110011"]).status.code(), Some(2));
}

#[test]
fn error_exit_codes() {
    assert_eq!(biosec(&["--config", "/definitely/missing.json", "metrics"]).status.code(), Some(3));
    assert_eq!(biosec(&["metrics"]).status.code(), Some(2));
    assert_eq!(biosec(&["--preset", "nope", "metrics"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"architecture": "sketch", "n": 4}"#).unwrap();
    assert_eq!(biosec(&["--config", cfg.to_str().unwrap(), "metrics"]).status.code(), Some(2));
}

#[test]
fn metrics_match_the_library() {
    let o = biosec(&["--preset", "sidebar-b", "metrics"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lib = presets::preset("sidebar-b").unwrap().run_metrics().unwrap();
    assert_eq!(json, serde_json::from_str::<serde_json::Value>(&lib.to_json().unwrap()).unwrap());
    assert_eq!(json["rows"][0]["far"], 0.25);
    assert_eq!(json["rows"][0]["leakage"]["s"], 2.0);
    assert_eq!(json["extra"]["deployment"]["cross_sar"][0], serde_json::json!([1.0, 0.5, 0.25]));

    let csv = stdout(&biosec(&["--preset", "sidebar-b", "metrics", "--format", "csv"]));
    assert_eq!(csv, lib.to_csv());
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = ["--preset", "bsc16", "--trials", "2000", "--seed", "9", "metrics", "--format", "csv"];
    let a = biosec(&args);
    assert!(a.status.success(), "{a:?}");
    assert_eq!(a.stdout, biosec(&args).stdout);
    assert!(stdout(&a).contains("montecarlo"));
}

#[test]
fn exact_mode_needs_no_trials() {
    let o = biosec(&["--preset", "sidebar-b", "--trials", "0", "--exact", "metrics", "--format", "csv"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("0,0.25,"));
}

#[test]
fn attack_reports_sar() {
    let o = biosec(&["--preset", "sidebar-b", "attack", "--view", "s"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json[0]["sar"]["value"], 1.0);
    let o = biosec(&["--preset", "sidebar-b", "attack", "--view", "none", "--strategy", "stored_data_inversion"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn paper_check_passes_and_names_failures() {
    let a = biosec(&["paper-check"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, biosec(&["paper-check"]).stdout);
    assert!(!stdout(&a).contains("FAIL"));

    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("f.json");
    let mut f = presets::SidebarFixture::default();
    f.h[0] = biosec::BitMatrix::parse_rows(&["1011", "1111"]).unwrap();
    fs::write(&fixture, serde_json::to_string(&f).unwrap()).unwrap();
    let o = biosec(&["paper-check", "--fixture", fixture.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL sidebarB.syndrome"));
}

#[test]
fn smc_round_trip_over_tcp() {
    let handle = biosec::smc::serve("127.0.0.1:0", biosec::smc::TemplateStore::in_memory(), Default::default()).unwrap();
    let addr = handle.addr().to_string();
    let smc = |extra: &[&str]| {
        let mut args = vec!["--seed", "3", "smc-auth", "--addr", &addr, "--id", "alice", "--key-bits", "64", "--theta", "1"];
        args.extend_from_slice(extra);
        biosec(&args).status.code()
    };
    assert_eq!(smc(&["--probe", "101100", "--enroll"]), Some(0));
    assert_eq!(smc(&["--probe", "101101"]), Some(0));
    assert_eq!(smc(&["--probe", "011101"]), Some(1));
    handle.shutdown();
}
