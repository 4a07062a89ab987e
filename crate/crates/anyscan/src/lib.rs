//! Static analysis of Python type annotations: extraction of a per-project
//! declaration model, normalization of PEP 484 type expressions, a stub-line
//! pipeline, and detectors for recurring patterns of dynamic (`Any`) typing.

pub mod config;
pub mod corpus;
pub mod detect;
pub mod extract;
pub mod location;
pub mod model;
pub mod report;
pub mod stub;
#[doc(hidden)]
pub mod testutil;
pub mod typeexpr;

pub use config::{derive_config_profile, ConfigProfile, OptionValue};
pub use corpus::{
    aggregate_stats, analyze_corpus, analyze_project, discover_projects, AnalyzeOptions,
    CorpusRun, CorpusStats, DiscoverMode, ProjectAnalysis, ProjectDescriptor, StubFilterSummary,
};
pub use detect::{run_detectors, Confidence, Finding, OverrideOutcome, Pattern, Suggestion};
pub use report::{build_report, emit_json, emit_stats_text, emit_text, Report};

pub use extract::{parse_source_bytes, parse_source_file, scan_ignore_comments};
pub use stub::{
    classify_signature, filter_pipeline, render_stub_line, render_variable_line,
    AnyClassification, ClassificationFlag, FilterOutcome, StubLine,
};
pub use location::SourceLocation;
pub use model::{
    merge_models, resolve_parent_method, Annotation, BodyFacts, CallShape, ClassDecl,
    Declaration, FileModel, IgnoreComment, MergeError, Parameter, ParamKind, ParseFailure,
    ProjectModel, ResolveOutcome, TypeVarDecl, UseKind, VariableDecl,
};
pub use typeexpr::{
    count_any, normalize, parse_type_expr, render, CallableParams, ParseContext, TypeExpr,
    TypeNode,
};
