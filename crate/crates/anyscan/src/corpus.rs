//! Project discovery and per-project analysis orchestration.
//!
//! A corpus is a directory of projects (or a single project); each project
//! is walked for Python sources, extracted into a [`ProjectModel`], run
//! through the stub pipeline and the enabled detectors, and summarized into
//! per-project statistics that aggregate field-wise across the corpus.
//! Every step is deterministic: files are sorted, parallel maps preserve
//! order, and all maps are ordered, so a fixed input tree produces a
//! byte-identical report regardless of worker count.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{derive_config_profile, ConfigProfile, CONFIG_FILENAMES};
use crate::detect::{run_detectors, Finding, Pattern};
use crate::extract::parse_source_bytes;
use crate::model::{merge_models, FileModel, ProjectModel};
use crate::stub::{
    filter_pipeline, render_stub_line, render_variable_line, ClassificationFlag, FilterOutcome,
    StubLine,
};
use crate::typeexpr::{count_any, normalize};

/// Directory names excluded from file discovery unless `include_vendored`
/// is set: third-party and generated code would swamp the counts.
const VENDORED_DIRS: [&str; 6] = [
    "venv",
    ".venv",
    "site-packages",
    "build",
    "dist",
    "node_modules",
];

/// Per-project file cap; pathological inputs abort with an explicit error
/// instead of running unbounded.
pub const FILE_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscoverMode {
    /// Treat the root itself as one project.
    SingleProject,
    /// Treat each immediate subdirectory with Python files as a project.
    CorpusOfSubdirectories,
}

/// One project found under the corpus root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectDescriptor {
    /// The directory name; unique within a corpus run.
    pub project_id: String,
    pub root: PathBuf,
    /// Recognized config filenames present at the project root.
    pub config_files: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("root directory not found: {0}")]
    RootNotFound(PathBuf),
}

/// Options controlling one analysis run.
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub patterns: BTreeSet<Pattern>,
    pub include_vendored: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            patterns: Pattern::default_enabled(),
            include_vendored: false,
        }
    }
}

/// Aggregated counters over one project or a whole corpus. Fields mirror
/// the statistics the analysis reports: how many annotation lines carry the
/// dynamic type, how many distinct lines survive the stub filter, findings
/// per pattern, and the explicit/implicit occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub projects: u64,
    pub files_parsed: u64,
    pub files_failed: u64,
    /// Stub lines whose signature contains ≥ 1 `Any` (implicit included).
    pub annotation_lines_with_any: u64,
    /// Lines remaining after the first-param-only and duplicate filters.
    pub distinct_lines_after_filter: u64,
    /// Finding counts, keyed by pattern name, for the enabled patterns.
    pub per_pattern_counts: BTreeMap<String, u64>,
    /// How many stub lines carry each classification flag; a line with two
    /// flags counts under both.
    pub classification_counts: BTreeMap<String, u64>,
    /// `Any` nodes in written-out annotations, after normalization (a bare
    /// `Dict` contributes two).
    pub explicit_any_count: u64,
    /// Unannotated parameter and return slots (each receives one `Any`).
    pub implicit_any_count: u64,
    pub unconstrained_typevar_count: u64,
    /// `# type: ignore[override]` comments anywhere in the project.
    pub override_comment_count: u64,
}

/// Counts around the stub filter for one project.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubFilterSummary {
    /// All rendered stub lines (defs and annotated variables).
    pub total_lines: u64,
    /// Lines with ≥ 1 `Any`; the filter's input.
    pub lines_with_any: u64,
    pub kept: u64,
    pub dropped_first_param_only: u64,
    pub dropped_duplicates: u64,
}

/// Everything the analysis produced for one project.
#[derive(Debug, Clone)]
pub struct ProjectAnalysis {
    pub project_id: String,
    pub model: ProjectModel,
    pub config_profile: ConfigProfile,
    pub findings: Vec<Finding>,
    /// Kept stub lines (the filter's output), for the `stubs` listing.
    pub stub_lines: Vec<StubLine>,
    pub stub_filter: StubFilterSummary,
    pub stats: CorpusStats,
    /// Project-level problems (file cap, unreadable configs); analysis
    /// still produces a (possibly empty) result.
    pub errors: Vec<String>,
}

/// A full corpus run.
#[derive(Debug, Clone)]
pub struct CorpusRun {
    pub projects: Vec<ProjectAnalysis>,
    pub stats: CorpusStats,
    pub warnings: Vec<String>,
}

// ---------------------------------------------------------------------------
// Discovery
// ---------------------------------------------------------------------------

fn is_hidden(name: &str) -> bool {
    name.starts_with('.')
}

fn dir_excluded(name: &str, include_vendored: bool) -> bool {
    if is_hidden(name) || name == "__pycache__" {
        return true;
    }
    !include_vendored && VENDORED_DIRS.contains(&name)
}

fn walker(root: &Path, include_vendored: bool) -> impl Iterator<Item = walkdir::Result<walkdir::DirEntry>> {
    walkdir::WalkDir::new(root)
        .follow_links(false)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(move |e| {
            if e.depth() == 0 {
                return true;
            }
            let name = e.file_name().to_string_lossy();
            if e.file_type().is_dir() {
                !dir_excluded(&name, include_vendored)
            } else {
                !is_hidden(&name)
            }
        })
}

fn is_python_file(entry: &walkdir::DirEntry) -> bool {
    // With follow_links off, symlinks are neither files nor directories
    // here, so they are skipped (and never descended) automatically.
    entry.file_type().is_file()
        && matches!(
            entry.path().extension().and_then(|e| e.to_str()),
            Some("py") | Some("pyi")
        )
}

/// Walk a project for Python sources. Results are sorted, hidden and
/// vendored directories pruned, and where `foo.py` and `foo.pyi` sit side
/// by side the stub file wins — its annotations are the authoritative ones.
/// Unreadable entries become warnings, not errors.
pub fn walk_project_files(
    root: &Path,
    include_vendored: bool,
    warnings: &mut Vec<String>,
) -> Result<Vec<PathBuf>, String> {
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in walker(root, include_vendored) {
        match entry {
            Ok(e) if is_python_file(&e) => files.push(e.path().to_path_buf()),
            Ok(_) => {}
            Err(err) => warnings.push(format!("skipped unreadable entry under {}: {err}", root.display())),
        }
    }

    let stubs: BTreeSet<PathBuf> = files
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "pyi"))
        .map(|p| p.with_extension(""))
        .collect();
    files.retain(|p| {
        p.extension().is_some_and(|e| e == "pyi") || !stubs.contains(&p.with_extension(""))
    });
    files.sort();

    if files.len() > FILE_CAP {
        return Err(format!(
            "project has {} Python files, over the {} file cap; refusing to analyze",
            files.len(),
            FILE_CAP
        ));
    }
    Ok(files)
}

fn has_python_files(root: &Path, include_vendored: bool) -> bool {
    walker(root, include_vendored)
        .flatten()
        .any(|e| is_python_file(&e))
}

fn config_files_at(root: &Path) -> Vec<String> {
    CONFIG_FILENAMES
        .iter()
        .filter(|name| root.join(name).is_file())
        .map(|name| name.to_string())
        .collect()
}

fn project_id_for(root: &Path) -> String {
    root.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "project".to_string())
}

/// Find the projects under `root`. Corpus mode takes each immediate
/// subdirectory containing at least one Python file; unreadable
/// subdirectories are skipped with a warning. Results are sorted by id.
pub fn discover_projects(
    root: &Path,
    mode: DiscoverMode,
    include_vendored: bool,
) -> Result<(Vec<ProjectDescriptor>, Vec<String>), CorpusError> {
    let root = root
        .canonicalize()
        .map_err(|_| CorpusError::RootNotFound(root.to_path_buf()))?;
    if !root.is_dir() {
        return Err(CorpusError::RootNotFound(root));
    }

    let mut warnings = Vec::new();
    let mut projects = Vec::new();
    match mode {
        DiscoverMode::SingleProject => {
            projects.push(ProjectDescriptor {
                project_id: project_id_for(&root),
                config_files: config_files_at(&root),
                root,
            });
        }
        DiscoverMode::CorpusOfSubdirectories => {
            let entries = match fs::read_dir(&root) {
                Ok(entries) => entries,
                Err(err) => {
                    return Err(CorpusError::RootNotFound(root.join(format!("({err})"))))
                }
            };
            for entry in entries {
                let entry = match entry {
                    Ok(e) => e,
                    Err(err) => {
                        warnings.push(format!("skipped unreadable entry: {err}"));
                        continue;
                    }
                };
                let path = entry.path();
                let name = entry.file_name().to_string_lossy().into_owned();
                if !path.is_dir() || dir_excluded(&name, include_vendored) {
                    continue;
                }
                if has_python_files(&path, include_vendored) {
                    projects.push(ProjectDescriptor {
                        project_id: name,
                        config_files: config_files_at(&path),
                        root: path,
                    });
                }
            }
            projects.sort_by(|a, b| a.project_id.cmp(&b.project_id));
        }
    }
    Ok((projects, warnings))
}

// ---------------------------------------------------------------------------
// Per-project analysis
// ---------------------------------------------------------------------------

/// Project-relative path with `/` separators, the form used in locations.
fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn parse_one(root: &Path, path: &Path) -> FileModel {
    let rel = relative_path(root, path);
    match fs::read(path) {
        Ok(bytes) => parse_source_bytes(&rel, &bytes),
        Err(err) => FileModel::failed(&rel, format!("unreadable: {err}")),
    }
}

/// Explicit `Any` nodes in a declaration's written annotations, plus its
/// count of unannotated (implicitly `Any`) slots.
fn declaration_any_counts(d: &crate::model::Declaration) -> (u64, u64) {
    let mut explicit = 0u64;
    let mut implicit = 0u64;
    for p in &d.params {
        match &p.annotation {
            Some(a) => explicit += count_any(&normalize(&a.expr)) as u64,
            None => implicit += 1,
        }
    }
    match &d.return_annotation {
        Some(a) => explicit += count_any(&normalize(&a.expr)) as u64,
        None => implicit += 1,
    }
    (explicit, implicit)
}

fn render_all_stub_lines(model: &ProjectModel) -> Vec<StubLine> {
    let mut lines: Vec<StubLine> = model.declarations.iter().map(render_stub_line).collect();
    lines.extend(model.variables.iter().map(render_variable_line));
    lines
}

fn project_stats(
    model: &ProjectModel,
    findings: &[Finding],
    all_lines: &[StubLine],
    filter: &StubFilterSummary,
    enabled: &BTreeSet<Pattern>,
) -> CorpusStats {
    let mut per_pattern: BTreeMap<String, u64> = enabled
        .iter()
        .map(|p| (p.name().to_string(), 0))
        .collect();
    for f in findings {
        *per_pattern.entry(f.pattern.name().to_string()).or_insert(0) += 1;
    }

    let mut classification: BTreeMap<String, u64> = ClassificationFlag::all()
        .iter()
        .map(|f| (f.as_str().to_string(), 0))
        .collect();
    for line in all_lines {
        for flag in &line.classification.flags {
            *classification.entry(flag.as_str().to_string()).or_insert(0) += 1;
        }
    }

    let mut explicit_any = 0u64;
    let mut implicit_any = 0u64;
    for d in &model.declarations {
        let (e, i) = declaration_any_counts(d);
        explicit_any += e;
        implicit_any += i;
    }
    for v in &model.variables {
        explicit_any += count_any(&normalize(&v.annotation.expr)) as u64;
    }

    CorpusStats {
        projects: 1,
        files_parsed: model.files_parsed as u64,
        files_failed: model.files_failed as u64,
        annotation_lines_with_any: filter.lines_with_any,
        distinct_lines_after_filter: filter.kept,
        per_pattern_counts: per_pattern,
        classification_counts: classification,
        explicit_any_count: explicit_any,
        implicit_any_count: implicit_any,
        unconstrained_typevar_count: model
            .typevars
            .iter()
            .filter(|tv| tv.is_unconstrained())
            .count() as u64,
        override_comment_count: model
            .ignores
            .iter()
            .filter(|i| i.codes.iter().any(|c| c == "override"))
            .count() as u64,
    }
}

/// Run the full pipeline over one project: walk, parse (in parallel),
/// merge, render and filter stub lines, detect, profile, summarize.
/// Nothing below the project level is fatal — parse failures and the file
/// cap are recorded and leave an empty (or partial) model behind.
pub fn analyze_project(descriptor: &ProjectDescriptor, options: &AnalyzeOptions) -> ProjectAnalysis {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let files = match walk_project_files(&descriptor.root, options.include_vendored, &mut warnings)
    {
        Ok(files) => files,
        Err(err) => {
            errors.push(err);
            Vec::new()
        }
    };
    errors.extend(warnings);

    let models: Vec<FileModel> = files
        .par_iter()
        .map(|path| parse_one(&descriptor.root, path))
        .collect();
    let model = merge_models(&descriptor.project_id, models)
        .expect("walked paths are unique within a project");

    let mut config_texts = Vec::new();
    for name in &descriptor.config_files {
        match fs::read_to_string(descriptor.root.join(name)) {
            Ok(text) => config_texts.push((name.clone(), text)),
            Err(err) => errors.push(format!("config {name} unreadable: {err}")),
        }
    }
    let config_profile = derive_config_profile(&descriptor.project_id, &config_texts);

    let all_lines = render_all_stub_lines(&model);
    let with_any: Vec<StubLine> = all_lines
        .iter()
        .filter(|l| !l.classification.is_none())
        .cloned()
        .collect();
    let lines_with_any = with_any.len() as u64;
    let outcome: FilterOutcome = filter_pipeline(with_any);
    let stub_filter = StubFilterSummary {
        total_lines: all_lines.len() as u64,
        lines_with_any,
        kept: outcome.kept.len() as u64,
        dropped_first_param_only: outcome.dropped_first_param_only as u64,
        dropped_duplicates: outcome.dropped_duplicates as u64,
    };

    let findings = run_detectors(&model, &options.patterns);
    let stats = project_stats(&model, &findings, &all_lines, &stub_filter, &options.patterns);

    ProjectAnalysis {
        project_id: descriptor.project_id.clone(),
        model,
        config_profile,
        findings,
        stub_lines: outcome.kept,
        stub_filter,
        stats,
        errors,
    }
}

/// Field-wise merge of per-project statistics; order-independent.
pub fn aggregate_stats<'a>(stats: impl IntoIterator<Item = &'a CorpusStats>) -> CorpusStats {
    let mut total = CorpusStats::default();
    for s in stats {
        total.projects += s.projects;
        total.files_parsed += s.files_parsed;
        total.files_failed += s.files_failed;
        total.annotation_lines_with_any += s.annotation_lines_with_any;
        total.distinct_lines_after_filter += s.distinct_lines_after_filter;
        for (k, v) in &s.per_pattern_counts {
            *total.per_pattern_counts.entry(k.clone()).or_insert(0) += v;
        }
        for (k, v) in &s.classification_counts {
            *total.classification_counts.entry(k.clone()).or_insert(0) += v;
        }
        total.explicit_any_count += s.explicit_any_count;
        total.implicit_any_count += s.implicit_any_count;
        total.unconstrained_typevar_count += s.unconstrained_typevar_count;
        total.override_comment_count += s.override_comment_count;
    }
    total
}

/// Discover and analyze a whole corpus (projects in parallel).
pub fn analyze_corpus(
    root: &Path,
    mode: DiscoverMode,
    options: &AnalyzeOptions,
) -> Result<CorpusRun, CorpusError> {
    let (descriptors, warnings) = discover_projects(root, mode, options.include_vendored)?;
    let projects: Vec<ProjectAnalysis> = descriptors
        .par_iter()
        .map(|d| analyze_project(d, options))
        .collect();
    let stats = aggregate_stats(projects.iter().map(|p| &p.stats));
    Ok(CorpusRun {
        projects,
        stats,
        warnings,
    })
}
