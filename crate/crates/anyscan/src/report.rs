//! The report: a stable JSON document and a line-oriented text format.
//!
//! JSON key order follows the struct definitions here and is documented in
//! `docs/report.schema.json`. The text format prints one tab-separated line
//! per finding followed by a stats block that mirrors [`CorpusStats`] field
//! names, so the two formats always carry the same findings.

use serde::{Deserialize, Serialize};

use crate::config::ConfigProfile;
use crate::corpus::{CorpusRun, CorpusStats, ProjectAnalysis, StubFilterSummary};
use crate::detect::Finding;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectReport {
    pub project_id: String,
    pub config_profile: ConfigProfile,
    pub findings: Vec<Finding>,
    pub stub_filter_summary: StubFilterSummary,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub tool_version: String,
    /// Omitted under `--no-timestamp` so reports compare byte-for-byte.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_timestamp: Option<String>,
    pub corpus_stats: CorpusStats,
    pub projects: Vec<ProjectReport>,
}

fn project_report(p: &ProjectAnalysis) -> ProjectReport {
    ProjectReport {
        project_id: p.project_id.clone(),
        config_profile: p.config_profile.clone(),
        findings: p.findings.clone(),
        stub_filter_summary: p.stub_filter.clone(),
        errors: p.errors.clone(),
    }
}

pub fn build_report(run: &CorpusRun, tool_version: &str, run_timestamp: Option<String>) -> Report {
    Report {
        schema_version: SCHEMA_VERSION.to_string(),
        tool_version: tool_version.to_string(),
        run_timestamp,
        corpus_stats: run.stats.clone(),
        projects: run.projects.iter().map(project_report).collect(),
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn emit_json(report: &Report) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

/// The stats block of the text format: `name: value` lines mirroring the
/// [`CorpusStats`] fields in declaration order, map entries flattened as
/// `map_name.KEY: value`.
pub fn emit_stats_text(stats: &CorpusStats) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: u64| out.push_str(&format!("{k}: {v}\n"));
    line("projects", stats.projects);
    line("files_parsed", stats.files_parsed);
    line("files_failed", stats.files_failed);
    line("annotation_lines_with_any", stats.annotation_lines_with_any);
    line("distinct_lines_after_filter", stats.distinct_lines_after_filter);
    for (k, v) in &stats.per_pattern_counts {
        line(&format!("per_pattern_counts.{k}"), *v);
    }
    for (k, v) in &stats.classification_counts {
        line(&format!("classification_counts.{k}"), *v);
    }
    line("explicit_any_count", stats.explicit_any_count);
    line("implicit_any_count", stats.implicit_any_count);
    line("unconstrained_typevar_count", stats.unconstrained_typevar_count);
    line("override_comment_count", stats.override_comment_count);
    out
}

fn finding_line(f: &Finding) -> String {
    format!(
        "{}\t{}\t{}:{}\t{}\t{}",
        f.pattern.name(),
        f.confidence.as_str(),
        f.location.file_path,
        f.location.line,
        f.symbol,
        f.pattern.summary()
    )
}

/// One line per finding, then the stats block; nothing else, so the total
/// line count is exactly findings + stats lines.
pub fn emit_text(report: &Report) -> String {
    let mut out = String::new();
    for project in &report.projects {
        for f in &project.findings {
            out.push_str(&finding_line(f));
            out.push('\n');
        }
    }
    out.push_str(&emit_stats_text(&report.corpus_stats));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{analyze_corpus, AnalyzeOptions, DiscoverMode};
    use crate::detect::Pattern;
    use std::fs;
    use std::path::Path;

    fn write(root: &Path, rel: &str, contents: &str) {
        let path = root.join(rel);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, contents).unwrap();
    }

    fn sample_report() -> Report {
        let tmp = tempfile::tempdir().unwrap();
        write(
            tmp.path(),
            "f.py",
            "from typing import TypeVar, Union, List\nCar = TypeVar('Car')\nTraffic = Union[Car, List['Traffic']]\n",
        );
        let run = analyze_corpus(
            tmp.path(),
            DiscoverMode::SingleProject,
            &AnalyzeOptions::default(),
        )
        .unwrap();
        let mut report = build_report(&run, "0.0.0-test", None);
        // The temp dir name is unstable; pin it for assertions.
        report.projects[0].project_id = "p".to_string();
        report.projects[0].config_profile.project_id = "p".to_string();
        report
    }

    #[test]
    fn uvar_text_line_is_stable() {
        let report = sample_report();
        let text = emit_text(&report);
        let first = text.lines().next().unwrap();
        assert_eq!(
            first,
            "PAT_UVAR\thigh\tf.py:2\tCar\tunconstrained TypeVar; add bound= or constraints"
        );
    }

    #[test]
    fn text_line_count_is_findings_plus_stats() {
        let report = sample_report();
        let text = emit_text(&report);
        let stats_lines = emit_stats_text(&report.corpus_stats).lines().count();
        let findings: usize = report.projects.iter().map(|p| p.findings.len()).sum();
        assert_eq!(text.lines().count(), findings + stats_lines);
        assert_eq!(findings, 1);
    }

    #[test]
    fn empty_report_is_stats_block_only() {
        let run = CorpusRun {
            projects: Vec::new(),
            stats: CorpusStats::default(),
            warnings: Vec::new(),
        };
        let report = build_report(&run, "0.0.0-test", None);
        let text = emit_text(&report);
        assert_eq!(text, emit_stats_text(&report.corpus_stats));
        assert!(text.starts_with("projects: 0\n"));
    }

    #[test]
    fn stats_block_mirrors_field_names() {
        let report = sample_report();
        let text = emit_stats_text(&report.corpus_stats);
        for key in [
            "projects:",
            "files_parsed:",
            "files_failed:",
            "annotation_lines_with_any:",
            "distinct_lines_after_filter:",
            "per_pattern_counts.PAT_UVAR:",
            "classification_counts.none:",
            "explicit_any_count:",
            "implicit_any_count:",
            "unconstrained_typevar_count:",
            "override_comment_count:",
        ] {
            assert!(
                text.lines().any(|l| l.starts_with(key)),
                "missing {key} in:\n{text}"
            );
        }
    }

    #[test]
    fn json_round_trips() {
        let report = sample_report();
        let json = emit_json(&report);
        assert!(json.ends_with('\n'));
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn json_serializes_stable_shapes() {
        let report = sample_report();
        let json = emit_json(&report);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["schema_version"], "1");
        assert!(value.get("run_timestamp").is_none());
        let finding = &value["projects"][0]["findings"][0];
        assert_eq!(finding["pattern"], "PAT_UVAR");
        assert_eq!(finding["confidence"], "high");
        assert_eq!(finding["location"]["file_path"], "f.py");
        assert_eq!(finding["location"]["line"], 2);
        assert_eq!(finding["suggestion"]["target"], "typevar_decl");
        assert!(finding["evidence"].is_object());
        // Per-pattern keys exist for every enabled pattern, zero or not.
        let counts = value["corpus_stats"]["per_pattern_counts"].as_object().unwrap();
        assert_eq!(counts.len(), Pattern::default_enabled().len());
    }

    #[test]
    fn timestamp_is_present_when_given() {
        let run = CorpusRun {
            projects: Vec::new(),
            stats: CorpusStats::default(),
            warnings: Vec::new(),
        };
        let report = build_report(&run, "0.0.0-test", Some("2024-05-01T00:00:00Z".into()));
        let value: serde_json::Value = serde_json::from_str(&emit_json(&report)).unwrap();
        assert_eq!(value["run_timestamp"], "2024-05-01T00:00:00Z");
    }
}
