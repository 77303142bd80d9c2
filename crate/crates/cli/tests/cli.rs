use std::path::PathBuf;
use std::process::Command;

use sgforge_cli::cli::run;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn codes(stdout: &str) -> Vec<String> {
    stdout
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["record"] == "diagnostic")
        .map(|v| v["code"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn validate_exit_codes_follow_severity() {
    let clean = run(["sgforge", "validate", &fixture("minimal.xml")]);
    assert_eq!(clean.exit, 0);
    assert_eq!(clean.stdout, "no issues found\n");

    let warned = run(["sgforge", "validate", &fixture("coverage-weak.xml")]);
    assert_eq!(warned.exit, 1, "{}", warned.stdout);
    assert!(warned.stdout.contains("W015"));

    let dashboard = run(["sgforge", "--format", "json", "validate", &fixture("legacy-dashboard.xml")]);
    assert_eq!(dashboard.exit, 2);
    assert!(codes(&dashboard.stdout).contains(&"E002".to_string()));
}

#[test]
fn unreadable_file_and_bad_flags_are_usage_errors() {
    let missing = run(["sgforge", "validate", "/definitely/not/here.xml"]);
    assert_eq!(missing.exit, 3);
    assert!(missing.stderr.contains("cannot read"));
    assert!(missing.stdout.is_empty());

    assert_eq!(run(["sgforge", "validate"]).exit, 3);
    assert_eq!(run(["sgforge", "--format", "yaml", "validate", "x"]).exit, 3);
    assert_eq!(run(["sgforge", "convert", &fixture("gate.xml"), "--to", "pdf"]).exit, 3);

    let help = run(["sgforge", "--help"]);
    assert_eq!(help.exit, 0);
    assert!(help.stdout.contains("validate"));
}

#[test]
fn json_output_is_one_record_per_line() {
    let out = run(["sgforge", "--format", "json", "paths", &fixture("investigation.xml")]);
    assert_eq!(out.exit, 1);
    let records: Vec<serde_json::Value> = out.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let last = records.last().unwrap();
    assert_eq!(last["record"], "paths");
    assert_eq!(last["count"], 8);
    assert_eq!(last["truncated"], false);
    assert_eq!(records.iter().filter(|r| r["record"] == "path").count(), 8);
}

#[test]
fn path_limit_truncates_and_warns() {
    let out = run(["sgforge", "--format", "json", "paths", &fixture("investigation.xml"), "--max-paths", "3"]);
    assert!(codes(&out.stdout).contains(&"W019".to_string()), "{}", out.stdout);
    assert!(out.stdout.contains(r#""truncated":true"#));
}

fn cohort_file(dir: &tempfile::TempDir, text: &str) -> String {
    let p = dir.path().join("cohort.jsonl");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_is_deterministic_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cohort = cohort_file(&dir, "{\"seed\": 1}\n{\"profile\": \"hasty\", \"count\": 30, \"k0\": {\"uniform\": [0.2, 0.7]}}\n");
    let args = ["sgforge", "--format", "json", "simulate", &fixture("investigation.xml"), "--cohort", &cohort];
    let a = run(args);
    assert_eq!(a.exit, 1, "{}", a.stderr);
    assert_eq!(a, run(args));
    assert!(a.stdout.contains(r#""seed":1"#));

    let b = run(["sgforge", "--format", "json", "simulate", &fixture("investigation.xml"), "--cohort", &cohort, "--seed", "8"]);
    assert!(b.stdout.contains(r#""seed":8"#));

    let capped = run([
        "sgforge", "--format", "json", "simulate", &fixture("retry-loop.xml"), "--cohort", &cohort, "--max-steps", "1",
    ]);
    assert!(capped.stdout.contains(r#""truncation_count":30"#), "{}", capped.stdout);
}

#[test]
fn simulate_refuses_scenarios_with_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cohort = cohort_file(&dir, "{\"profile\": \"curious\", \"count\": 5, \"k0\": {\"point\": 0.5}}\n");
    let out = run(["sgforge", "simulate", &fixture("legacy-dashboard.xml"), "--cohort", &cohort]);
    assert_eq!(out.exit, 2);
    assert!(out.stdout.contains("E002"));
    assert!(out.stdout.contains("simulation refused"));
}

#[test]
fn empty_cohort_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cohort = cohort_file(&dir, "# nobody today\n{\"seed\": 5}\n");
    let out = run(["sgforge", "simulate", &fixture("minimal.xml"), "--cohort", &cohort]);
    assert_eq!(out.exit, 0);
    assert_eq!(out.stdout, "no players simulated\n");
}

#[test]
fn bad_cohort_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cohort = cohort_file(&dir, "{\"profile\": \"sleepy\", \"count\": 5, \"k0\": {\"point\": 0.5}}\n");
    let out = run(["sgforge", "simulate", &fixture("gate.xml"), "--cohort", &cohort]);
    assert_eq!(out.exit, 3);
    assert!(out.stderr.contains("line 1"), "{}", out.stderr);
}

#[test]
fn convert_round_trip_and_refusals() {
    let dir = tempfile::tempdir().unwrap();
    let canonical = dir.path().join("dashboard.canonical.xml");
    let out = run([
        "sgforge", "convert", &fixture("legacy-dashboard.xml"), "--to", "canonical", "--output", canonical.to_str().unwrap(),
    ]);
    assert_eq!(out.exit, 2);
    assert!(out.stdout.is_empty());
    assert!(out.stderr.contains("E002"));
    let text = std::fs::read_to_string(&canonical).unwrap();
    assert!(text.starts_with("<?xml"));

    let back = run(["sgforge", "convert", canonical.to_str().unwrap(), "--from", "canonical", "--to", "legacy"]);
    assert!(back.stdout.contains(r#"condition1="&amp;score&gt;15""#), "{}", back.stdout);

    let wrong_from = run(["sgforge", "convert", canonical.to_str().unwrap(), "--from", "legacy", "--to", "legacy"]);
    assert_eq!(wrong_from.exit, 3);

    let choices = run(["sgforge", "convert", &fixture("choices.xml"), "--to", "legacy"]);
    assert_eq!(choices.exit, 2);
    assert!(choices.stdout.is_empty());
    assert!(choices.stderr.contains("not representable"));
}

#[test]
fn binary_uses_the_same_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sgforge");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let out = status(&["validate", &fixture("legacy-dashboard.xml")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("E002"));
    assert_eq!(status(&["validate", &fixture("linear.xml")]).status.code(), Some(0));
    assert_eq!(status(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(status(&["--version"]).status.code(), Some(0));
}
