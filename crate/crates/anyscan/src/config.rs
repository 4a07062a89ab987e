//! Mypy configuration profiles.
//!
//! Projects admit the dynamic type implicitly through configuration: unless
//! `disallow_untyped_defs` and `disallow_any_generics` are both switched on
//! (directly or through `strict`), unannotated code silently receives `Any`.
//! This module reads the three recognized config sources — the `[mypy]`
//! section of `mypy.ini` or `setup.cfg`, and the `[tool.mypy]` table of
//! `pyproject.toml` — and derives that exposure per project.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Config filenames recognized at a project root, in precedence order.
/// mypy itself stops at the first file it finds in its own search order;
/// this mirrors that winner-takes-all behavior while still recording every
/// file read, so a surprising profile can be audited.
pub const CONFIG_FILENAMES: [&str; 3] = ["mypy.ini", "pyproject.toml", "setup.cfg"];

/// Flags interpreted (as booleans) when deriving the profile. Everything
/// else found in the mypy section is preserved verbatim.
pub const RECOGNIZED_FLAGS: [&str; 7] = [
    "strict",
    "disallow_untyped_defs",
    "disallow_any_generics",
    "disallow_any_explicit",
    "disallow_any_expr",
    "disallow_untyped_calls",
    "ignore_missing_imports",
];

/// Of the recognized flags, the ones `strict = true` turns on.
const STRICT_BUNDLE: [&str; 3] = [
    "disallow_untyped_defs",
    "disallow_any_generics",
    "disallow_untyped_calls",
];

/// A config option value: recognized booleans parsed, anything else kept
/// as the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OptionValue {
    Bool(bool),
    Str(String),
}

impl OptionValue {
    pub fn is_true(&self) -> bool {
        matches!(self, OptionValue::Bool(true))
    }
}

/// A config file that could not be parsed. The profile is still derived
/// from the remaining files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedConfig {
    pub file: String,
    pub reason: String,
}

/// The derived typing-strictness profile of one project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigProfile {
    pub project_id: String,
    /// Options of the winning file's mypy section, `strict`'s bundle
    /// materialized (an explicit per-flag setting still wins over `strict`).
    pub options: BTreeMap<String, OptionValue>,
    /// True unless `disallow_untyped_defs` and `disallow_any_generics` are
    /// both in effect: unannotated positions then surface as `Any`.
    pub implicit_any_exposed: bool,
    /// The file whose mypy section the options came from, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_file: Option<String>,
    /// Every config file that was read, winner or not.
    pub files_read: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub errors: Vec<MalformedConfig>,
}

/// Parse an INI-style boolean the way configparser/mypy accept them.
fn parse_bool(value: &str) -> Option<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

fn option_value(raw: &str) -> OptionValue {
    match parse_bool(raw) {
        Some(b) => OptionValue::Bool(b),
        None => OptionValue::Str(raw.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Section readers
// ---------------------------------------------------------------------------

/// Read the `[mypy]` section of an INI file. Returns `Ok(None)` when the
/// file parses but has no global mypy section (per-module `[mypy-...]`
/// sections do not count).
fn read_ini_mypy(text: &str) -> Result<Option<BTreeMap<String, OptionValue>>, String> {
    let mut section: Option<String> = None;
    let mut found = false;
    let mut options = BTreeMap::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        // Indented lines continue the previous value; flag extraction only
        // needs the first line, so they are accepted and skipped.
        if line.starts_with([' ', '\t']) && section.is_some() {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if name == "mypy" {
                found = true;
            }
            section = Some(name);
            continue;
        }
        let Some((key, value)) = trimmed.split_once(['=', ':']) else {
            return Err(format!("line {}: expected `key = value`", idx + 1));
        };
        if section.is_none() {
            return Err(format!("line {}: option before any section", idx + 1));
        }
        if section.as_deref() == Some("mypy") {
            options.insert(
                key.trim().to_ascii_lowercase(),
                option_value(value.trim()),
            );
        }
    }
    Ok(found.then_some(options))
}

/// Read the `[tool.mypy]` table of a pyproject file. Non-scalar values
/// (arrays, inline tables) are preserved as their TOML rendering.
fn read_pyproject_mypy(text: &str) -> Result<Option<BTreeMap<String, OptionValue>>, String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    let Some(mypy) = table
        .get("tool")
        .and_then(|t| t.get("mypy"))
        .and_then(|t| t.as_table())
    else {
        return Ok(None);
    };
    let mut options = BTreeMap::new();
    for (key, value) in mypy {
        let v = match value {
            toml::Value::Boolean(b) => OptionValue::Bool(*b),
            toml::Value::String(s) => OptionValue::Str(s.clone()),
            other => OptionValue::Str(other.to_string()),
        };
        options.insert(key.to_ascii_lowercase(), v);
    }
    Ok(Some(options))
}

// ---------------------------------------------------------------------------
// Profile derivation
// ---------------------------------------------------------------------------

/// Derive a project's config profile from `(filename, contents)` pairs.
///
/// Only the filenames in [`CONFIG_FILENAMES`] are considered, in that
/// precedence order; the first file that parses and actually contains a
/// mypy section wins outright. Malformed files are recorded and skipped.
pub fn derive_config_profile(project_id: &str, files: &[(String, String)]) -> ConfigProfile {
    let mut profile = ConfigProfile {
        project_id: project_id.to_string(),
        options: BTreeMap::new(),
        implicit_any_exposed: true,
        source_file: None,
        files_read: Vec::new(),
        errors: Vec::new(),
    };

    for name in CONFIG_FILENAMES {
        let Some((_, text)) = files.iter().find(|(n, _)| n == name) else {
            continue;
        };
        profile.files_read.push(name.to_string());
        if profile.source_file.is_some() {
            continue; // already decided; later files are audit-only
        }
        let parsed = if name == "pyproject.toml" {
            read_pyproject_mypy(text)
        } else {
            read_ini_mypy(text)
        };
        match parsed {
            Ok(Some(options)) => {
                profile.options = options;
                profile.source_file = Some(name.to_string());
            }
            Ok(None) => {}
            Err(reason) => profile.errors.push(MalformedConfig {
                file: name.to_string(),
                reason,
            }),
        }
    }

    if profile.options.get("strict").is_some_and(OptionValue::is_true) {
        for flag in STRICT_BUNDLE {
            profile
                .options
                .entry(flag.to_string())
                .or_insert(OptionValue::Bool(true));
        }
    }
    let effective = |flag: &str| {
        profile
            .options
            .get(flag)
            .is_some_and(OptionValue::is_true)
    };
    profile.implicit_any_exposed =
        !(effective("disallow_untyped_defs") && effective("disallow_any_generics"));
    profile
}
