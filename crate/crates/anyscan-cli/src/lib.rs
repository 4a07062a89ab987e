//! The `anyscan` command line: argument parsing, run orchestration, and
//! exit-code policy. All real work happens in the `anyscan` library; this
//! crate only maps flags to [`AnalyzeOptions`] and reports to streams.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use anyscan::{
    analyze_corpus, build_report, emit_json, emit_stats_text, emit_text, AnalyzeOptions,
    CorpusRun, DiscoverMode, Pattern,
};

/// One-line synopsis printed under every usage diagnostic.
const SYNOPSIS: &str = "usage: anyscan <analyze|stats|stubs> PATH [--corpus] [--patterns P1,P2,...] [--format json|text] [--output FILE] [--fail-on-findings] [--include-vendored] [--no-timestamp] [--jobs N]";

const EXIT_OK: i32 = 0;
const EXIT_FINDINGS: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_PARSE_FAILURES: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "anyscan",
    version,
    about = "Detect dynamic-type (Any) usage patterns in Python annotations",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full run: findings, then a statistics block (or a JSON report).
    Analyze(RunArgs),
    /// Corpus statistics only.
    Stats(RunArgs),
    /// Filtered one-line stubs for every Any-carrying annotation.
    Stubs(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Project directory, or corpus root with --corpus.
    path: PathBuf,

    /// Treat PATH as a corpus: each immediate subdirectory containing
    /// Python files is analyzed as its own project.
    #[arg(long)]
    corpus: bool,

    /// Comma-separated pattern names, e.g. PAT_UVAR,PAT_SELF
    /// (default: all except the experimental PAT_TVAR).
    #[arg(long, value_name = "LIST")]
    patterns: Option<String>,

    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,

    /// Write output to FILE instead of stdout.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Exit with status 1 when any finding is reported.
    #[arg(long)]
    fail_on_findings: bool,

    /// Also scan vendored/virtualenv directories (site-packages, vendor, ...).
    #[arg(long)]
    include_vendored: bool,

    /// Omit the run timestamp so identical runs compare byte-for-byte.
    #[arg(long)]
    no_timestamp: bool,

    /// Worker threads for parsing and per-project analysis
    /// (default: one per CPU).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

fn usage_error(message: &str) -> i32 {
    eprintln!("anyscan: {message}");
    eprintln!("{SYNOPSIS}");
    EXIT_USAGE
}

/// Write `text` to stdout, tolerating a closed pipe. When the reader (say,
/// `anyscan ... | head`) hangs up early there is nothing left worth printing,
/// so a broken pipe ends output quietly instead of panicking.
fn print_stdout(text: &str) {
    let mut out = io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn parse_patterns(spec: &str) -> Result<std::collections::BTreeSet<Pattern>, String> {
    let mut set = std::collections::BTreeSet::new();
    for name in spec.split(',') {
        let name = name.trim();
        if name.is_empty() {
            return Err("empty pattern name in --patterns".to_string());
        }
        set.insert(Pattern::from_str(name).map_err(|e| e.to_string())?);
    }
    Ok(set)
}

/// Render the run for one subcommand. `analyze` is the full report; `stats`
/// and `stubs` are projections of the same analysis.
fn render_output(command: &Command, args: &RunArgs, run: &CorpusRun) -> String {
    let timestamp = if args.no_timestamp {
        None
    } else {
        Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
    };
    match command {
        Command::Analyze(_) => {
            let report = build_report(run, env!("CARGO_PKG_VERSION"), timestamp);
            match args.format {
                Format::Json => emit_json(&report),
                Format::Text => emit_text(&report),
            }
        }
        Command::Stats(_) => match args.format {
            Format::Json => {
                let mut out =
                    serde_json::to_string_pretty(&run.stats).expect("stats serialize");
                out.push('\n');
                out
            }
            Format::Text => emit_stats_text(&run.stats),
        },
        Command::Stubs(_) => match args.format {
            Format::Json => {
                let projects: Vec<serde_json::Value> = run
                    .projects
                    .iter()
                    .map(|p| {
                        serde_json::json!({
                            "project_id": p.project_id,
                            "stub_lines": p.stub_lines.iter().map(|l| &l.text).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                let mut out = serde_json::to_string_pretty(&projects).expect("stubs serialize");
                out.push('\n');
                out
            }
            Format::Text => {
                let mut out = String::new();
                for p in &run.projects {
                    for line in &p.stub_lines {
                        out.push_str(&line.text);
                        out.push('\n');
                    }
                }
                out
            }
        },
    }
}

fn execute(command: Command) -> i32 {
    let args = match &command {
        Command::Analyze(a) | Command::Stats(a) | Command::Stubs(a) => a,
    };

    let mut options = AnalyzeOptions::default();
    options.include_vendored = args.include_vendored;
    if let Some(spec) = &args.patterns {
        match parse_patterns(spec) {
            Ok(set) => options.patterns = set,
            Err(msg) => return usage_error(&msg),
        }
    }
    let mode = if args.corpus {
        DiscoverMode::CorpusOfSubdirectories
    } else {
        DiscoverMode::SingleProject
    };

    let run_analysis = || analyze_corpus(&args.path, mode, &options);
    let result = match args.jobs {
        Some(n) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool,
                Err(e) => return usage_error(&format!("--jobs {n}: {e}")),
            };
            pool.install(run_analysis)
        }
        None => run_analysis(),
    };
    let run = match result {
        Ok(run) => run,
        Err(e) => return usage_error(&e.to_string()),
    };
    for warning in &run.warnings {
        eprintln!("anyscan: warning: {warning}");
    }

    let rendered = render_output(&command, args, &run);
    if let Some(path) = &args.output {
        if let Err(e) = fs::write(path, rendered) {
            eprintln!("anyscan: cannot write {}: {e}", path.display());
            return EXIT_USAGE;
        }
    } else {
        print_stdout(&rendered);
    }

    let attempted = run.stats.files_parsed + run.stats.files_failed;
    if run.stats.files_failed * 2 > attempted {
        return EXIT_PARSE_FAILURES;
    }
    let finding_count: usize = run.projects.iter().map(|p| p.findings.len()).sum();
    if args.fail_on_findings && finding_count > 0 {
        return EXIT_FINDINGS;
    }
    EXIT_OK
}

/// Parse `argv` and run. Returns the process exit code; all output goes to
/// the real stdout/stderr (tests drive the compiled binary).
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => execute(cli.command),
        Err(err) if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print_stdout(&err.to_string());
            EXIT_OK
        }
        Err(err) => {
            // First line only: clap's multi-line render duplicates the usage
            // text we print ourselves.
            let rendered = err.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            usage_error(first.trim_start_matches("error: "))
        }
    }
}
