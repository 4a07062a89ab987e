//! Black-box tests of the compiled binary: exit codes, output formats,
//! format parity, and the determinism contract.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn anyscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anyscan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn analyze(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["analyze", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    anyscan(&args)
}

// --------------------------------------------------------------------------
// Exit codes
// --------------------------------------------------------------------------

#[test]
fn clean_project_exits_zero_even_with_fail_on_findings() {
    let out = analyze(&fixture("corrected"), &["--fail-on-findings"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn findings_with_fail_on_findings_exit_one() {
    let out = analyze(
        &fixture("patterns"),
        &["--patterns", "PAT_SELF", "--fail-on-findings"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("Shape.move"));
}

#[test]
fn findings_without_the_flag_exit_zero() {
    let out = analyze(&fixture("patterns"), &["--patterns", "PAT_SELF"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two_with_diagnostic_and_synopsis() {
    for args in [
        vec!["analyze", "/nonexistent/path"],
        vec!["analyze", "fixtures-missing", "--patterns", "PAT_NOPE"],
        vec!["analyze"],
        vec!["explode", "."],
        vec!["analyze", ".", "--format", "yaml"],
    ] {
        let out = anyscan(&args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        let mut lines = stderr.lines();
        let diagnostic = lines.next().unwrap_or("");
        assert!(!diagnostic.is_empty(), "args {args:?}: no diagnostic");
        assert!(
            stderr.lines().any(|l| l.starts_with("usage: anyscan")),
            "args {args:?}: no synopsis in {stderr}"
        );
    }
}

#[test]
fn invalid_pattern_outranks_missing_path() {
    // Usage problems outrank everything else: a bad pattern list fails even
    // when the path is also missing, without reaching discovery.
    let out = anyscan(&["analyze", "/nonexistent", "--patterns", "WHAT"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown pattern"));
}

#[test]
fn majority_parse_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ok.py"), "def f(x: int) -> int:\n    return x\n").unwrap();
    std::fs::write(dir.path().join("bad1.py"), "def broken(:\n").unwrap();
    std::fs::write(dir.path().join("bad2.py"), b"\xff\xfe\x00garbage").unwrap();

    let out = analyze(dir.path(), &["--fail-on-findings"]);
    assert_eq!(out.status.code(), Some(3));
    // The report is still produced for whatever did parse.
    assert!(stdout(&out).contains("files_failed: 2"));
}

#[test]
fn closed_stdout_pipe_is_not_an_error() {
    // A report larger than the OS pipe buffer, so the write is still in
    // flight when the reader hangs up.
    let dir = tempfile::tempdir().unwrap();
    anyscan::testutil::write_synthetic_corpus(dir.path(), 5, 40, 0x9E1E);

    let mut child = Command::new(env!("CARGO_BIN_EXE_anyscan"))
        .args(["analyze", dir.path().to_str().unwrap(), "--corpus", "--format", "json"])
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .expect("binary runs");
    drop(child.stdout.take());

    let out = child.wait_with_output().unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(0), "stderr: {stderr}");
    assert!(!stderr.contains("panicked"), "stderr: {stderr}");
}

// --------------------------------------------------------------------------
// Formats and parity
// --------------------------------------------------------------------------

#[test]
fn text_and_json_report_the_same_findings() {
    let args = ["--patterns", "PAT_UVAR,PAT_SELF,PAT_DDICT,PAT_WRAPPER", "--no-timestamp"];
    let text = stdout(&analyze(&fixture("patterns"), &args));
    let json = stdout(&analyze(&fixture("patterns"), &[&args[..], &["--format", "json"]].concat()));

    let report = common::assert_valid_report(&json);
    let mut from_json: Vec<(String, String, u64, String)> = report["projects"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|p| p["findings"].as_array().unwrap())
        .map(|f| {
            (
                f["pattern"].as_str().unwrap().to_string(),
                f["location"]["file_path"].as_str().unwrap().to_string(),
                f["location"]["line"].as_u64().unwrap(),
                f["symbol"].as_str().unwrap().to_string(),
            )
        })
        .collect();

    let mut from_text: Vec<(String, String, u64, String)> = text
        .lines()
        .filter(|l| l.starts_with("PAT_"))
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            assert_eq!(cols.len(), 5, "finding line has 5 columns: {l}");
            let (file, line) = cols[2].rsplit_once(':').unwrap();
            (
                cols[0].to_string(),
                file.to_string(),
                line.parse().unwrap(),
                cols[3].to_string(),
            )
        })
        .collect();

    from_json.sort();
    from_text.sort();
    assert_eq!(from_json, from_text);
    assert_eq!(from_json.len(), 4);
}

#[test]
fn uvar_finding_line_is_stable() {
    let text = stdout(&analyze(&fixture("patterns"), &["--patterns", "PAT_UVAR"]));
    let line = text.lines().next().unwrap();
    assert_eq!(
        line,
        "PAT_UVAR\thigh\tpat_uvar.py:3\tCar\tunconstrained TypeVar; add bound= or constraints"
    );
}

#[test]
fn stats_subcommand_matches_the_analyze_stats_block() {
    let triggers = fixture("patterns");
    let stats_text = stdout(&anyscan(&["stats", triggers.to_str().unwrap()]));
    let analyze_text = stdout(&analyze(&triggers, &[]));
    assert!(
        analyze_text.ends_with(&stats_text),
        "analyze text must end with the stats block"
    );
    assert!(stats_text.starts_with("projects: 1\n"));

    let stats_json = stdout(&anyscan(&[
        "stats",
        triggers.to_str().unwrap(),
        "--format",
        "json",
    ]));
    let parsed: serde_json::Value = serde_json::from_str(&stats_json).unwrap();
    assert_eq!(parsed["files_parsed"], 8);
    assert_eq!(parsed["override_comment_count"], 1);
}

#[test]
fn stubs_subcommand_lists_kept_lines_in_both_formats() {
    let triggers = fixture("patterns");
    let text = stdout(&anyscan(&["stubs", triggers.to_str().unwrap()]));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.contains(&"def eq(a: Any, b: Any) -> bool: ..."));
    assert!(lines.iter().all(|l| l.starts_with("def ") || l.contains(": ")));

    let json = stdout(&anyscan(&["stubs", triggers.to_str().unwrap(), "--format", "json"]));
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    let from_json: Vec<&str> = parsed[0]["stub_lines"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(from_json, lines, "formats disagree on kept stub lines");
}

#[test]
fn output_flag_writes_the_file_and_keeps_stdout_empty() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("report.json");
    let out = analyze(
        &fixture("patterns"),
        &["--format", "json", "--no-timestamp", "--output", dest.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&dest).unwrap();
    common::assert_valid_report(&written);
}

#[test]
fn corpus_mode_analyzes_each_subdirectory_as_a_project() {
    let out = analyze(&fixture("configs"), &["--corpus", "--format", "json", "--no-timestamp"]);
    let report = common::assert_valid_report(&stdout(&out));
    let ids: Vec<&str> = report["projects"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["project_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, vec!["cfg_project", "ini_project", "strict_project", "toml_project"]);
}

// --------------------------------------------------------------------------
// Determinism and timestamps
// --------------------------------------------------------------------------

#[test]
fn no_timestamp_runs_are_byte_identical() {
    let args = ["--format", "json", "--no-timestamp"];
    let first = analyze(&fixture("patterns"), &args);
    let second = analyze(&fixture("patterns"), &args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn timestamp_is_present_unless_suppressed() {
    let with = stdout(&analyze(&fixture("corrected"), &["--format", "json"]));
    let without = stdout(&analyze(&fixture("corrected"), &["--format", "json", "--no-timestamp"]));
    let with: serde_json::Value = serde_json::from_str(&with).unwrap();
    let without: serde_json::Value = serde_json::from_str(&without).unwrap();
    assert!(with.get("run_timestamp").is_some());
    assert!(without.get("run_timestamp").is_none());
}
