//! The eight pattern detectors.
//!
//! Each detector is a pure function over an immutable [`ProjectModel`]
//! producing [`Finding`]s; they share no state and may run in any order.
//! Confidence levels are fixed per rule rather than tuned scores, so counts
//! are reproducible run to run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::location::SourceLocation;
use crate::model::{
    resolve_parent_method, Declaration, ProjectModel, ResolveOutcome, UseKind,
};
use crate::stub::render_stub_line;
use crate::typeexpr::{count_any, normalize, render, TypeExpr, TypeNode};

// ---------------------------------------------------------------------------
// Finding types
// ---------------------------------------------------------------------------

/// The detectable patterns of dynamic-type use.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Pattern {
    /// `Any` standing in for a type variable (experimental heuristic).
    #[serde(rename = "PAT_TVAR")]
    Tvar,
    /// A `TypeVar` declared without constraints or a bound.
    #[serde(rename = "PAT_UVAR")]
    Uvar,
    /// A method returning its receiver but annotated `-> Any`.
    #[serde(rename = "PAT_SELF")]
    SelfReturn,
    /// A dictionary signature with `Any` values used like a record.
    #[serde(rename = "PAT_DDICT")]
    DependentDict,
    /// An override mismatch silenced with `# type: ignore[override]`.
    #[serde(rename = "PAT_OVERRIDE")]
    Override,
    /// A plain `Callable` parameter only ever called with catch-alls.
    #[serde(rename = "PAT_WRAPPER")]
    Wrapper,
    /// An `Any`-typed parameter none of whose uses constrain it.
    #[serde(rename = "PAT_DETAILS")]
    DetailHiding,
    /// A function that always raises but is annotated `-> Any`.
    #[serde(rename = "PAT_NORETURN")]
    NoReturn,
}

impl Pattern {
    pub fn all() -> [Pattern; 8] {
        [
            Pattern::Tvar,
            Pattern::Uvar,
            Pattern::SelfReturn,
            Pattern::DependentDict,
            Pattern::Override,
            Pattern::Wrapper,
            Pattern::DetailHiding,
            Pattern::NoReturn,
        ]
    }

    /// The default pattern set: everything except the experimental PAT_TVAR.
    pub fn default_enabled() -> BTreeSet<Pattern> {
        Pattern::all()
            .into_iter()
            .filter(|p| *p != Pattern::Tvar)
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Tvar => "PAT_TVAR",
            Pattern::Uvar => "PAT_UVAR",
            Pattern::SelfReturn => "PAT_SELF",
            Pattern::DependentDict => "PAT_DDICT",
            Pattern::Override => "PAT_OVERRIDE",
            Pattern::Wrapper => "PAT_WRAPPER",
            Pattern::DetailHiding => "PAT_DETAILS",
            Pattern::NoReturn => "PAT_NORETURN",
        }
    }

    /// One-line description used as the summary column of text output.
    pub fn summary(self) -> &'static str {
        match self {
            Pattern::Tvar => "Any parameters used like a type variable (experimental)",
            Pattern::Uvar => "unconstrained TypeVar; add bound= or constraints",
            Pattern::SelfReturn => "method returns its receiver but is annotated -> Any; use Self",
            Pattern::DependentDict => "dictionary signature with Any values",
            Pattern::Override => "override mismatch suppressed with type: ignore[override]",
            Pattern::Wrapper => "plain Callable parameter forwarded with catch-all arguments",
            Pattern::DetailHiding => "Any parameter with only unconstraining uses; a TypeVar would do",
            Pattern::NoReturn => "always raises but is annotated -> Any; use NoReturn",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = UnknownPattern;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        Pattern::all()
            .into_iter()
            .find(|p| p.name() == upper)
            .ok_or_else(|| UnknownPattern(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown pattern `{0}` (expected one of PAT_TVAR, PAT_UVAR, PAT_SELF, PAT_DDICT, PAT_OVERRIDE, PAT_WRAPPER, PAT_DETAILS, PAT_NORETURN)")]
pub struct UnknownPattern(pub String);

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    High,
    Medium,
    Low,
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::High => "high",
            Confidence::Medium => "medium",
            Confidence::Low => "low",
        }
    }
}

/// What a suggestion proposes to replace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum SuggestionTarget {
    ReturnType,
    Param { index: usize },
    TypevarDecl,
}

/// A concrete alternative annotation, attached only where the pattern has
/// a precise fix (Self, bound=/constraints, NoReturn, a type variable).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    #[serde(flatten)]
    pub target: SuggestionTarget,
    pub replacement: String,
}

/// One detected occurrence of a pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub pattern: Pattern,
    pub location: SourceLocation,
    /// Module-relative symbol (`Class.method`); reports show the file
    /// alongside.
    pub symbol: String,
    pub confidence: Confidence,
    /// Pattern-specific details as a flat string map.
    pub evidence: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<Suggestion>,
}

/// How an overriding method compares to its resolved parent.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum OverrideOutcome {
    DifferentArgs,
    IdenticalArgs,
    DifferentReturnOnly,
    ParentNotFound,
    ParentClassUnresolved,
}

impl OverrideOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            OverrideOutcome::DifferentArgs => "different_args",
            OverrideOutcome::IdenticalArgs => "identical_args",
            OverrideOutcome::DifferentReturnOnly => "different_return_only",
            OverrideOutcome::ParentNotFound => "parent_not_found",
            OverrideOutcome::ParentClassUnresolved => "parent_class_unresolved",
        }
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn evidence(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// The normalized explicit annotation of a slot, if any.
fn explicit_type(annotation: Option<&crate::model::Annotation>) -> Option<TypeExpr> {
    annotation.map(|a| normalize(&a.expr))
}

/// True when the return annotation is written out and normalizes to `Any`.
fn explicit_any_return(d: &Declaration) -> bool {
    explicit_type(d.return_annotation.as_ref()).is_some_and(|t| t.is_any())
}

/// Dict/Mapping heads whose value slot the dictionary analyses look at.
fn dict_value(t: &TypeExpr) -> Option<(&TypeExpr, &TypeExpr)> {
    match &t.node {
        TypeNode::Generic { head, args } if (head == "Dict" || head == "Mapping") && args.len() == 2 => {
            Some((&args[0], &args[1]))
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// PAT_UVAR — unconstrained type variables
// ---------------------------------------------------------------------------

/// A `TypeVar` with neither value constraints nor an upper bound accepts
/// every type, so it weakens each of its instantiations.
pub fn detect_unconstrained_typevars(model: &ProjectModel) -> Vec<Finding> {
    model
        .typevars
        .iter()
        .filter(|tv| tv.is_unconstrained())
        .map(|tv| Finding {
            pattern: Pattern::Uvar,
            location: tv.location.clone(),
            symbol: tv.target_name.clone(),
            confidence: Confidence::High,
            evidence: evidence(&[("declared_name", tv.declared_name.clone())]),
            suggestion: Some(Suggestion {
                target: SuggestionTarget::TypevarDecl,
                replacement: format!("TypeVar('{}', bound=...)", tv.declared_name),
            }),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// PAT_SELF — Any instead of Self
// ---------------------------------------------------------------------------

/// Methods that return their first parameter but declare `-> Any`. Only an
/// explicit `Any` fires: a missing return annotation is an omission, not an
/// annotation choice.
pub fn detect_any_instead_of_self(model: &ProjectModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    for d in &model.declarations {
        if !d.is_method || !explicit_any_return(d) {
            continue;
        }
        let facts = &d.body_facts;
        if facts.returns_of_first_param == 0 {
            continue;
        }
        let confidence = if facts.returns_of_first_param == facts.total_return_statements {
            Confidence::High
        } else {
            Confidence::Medium
        };
        findings.push(Finding {
            pattern: Pattern::SelfReturn,
            location: d.location.clone(),
            symbol: d.symbol(),
            confidence,
            evidence: evidence(&[
                (
                    "returns_of_first_param",
                    facts.returns_of_first_param.to_string(),
                ),
                (
                    "total_return_statements",
                    facts.total_return_statements.to_string(),
                ),
            ]),
            suggestion: Some(Suggestion {
                target: SuggestionTarget::ReturnType,
                replacement: "Self".to_string(),
            }),
        });
    }
    findings
}

// ---------------------------------------------------------------------------
// PAT_OVERRIDE — suppressed override mismatches
// ---------------------------------------------------------------------------

/// Non-receiver parameter types, missing annotations materialized as `Any`.
fn comparable_params(d: &Declaration) -> Vec<TypeExpr> {
    let skip = usize::from(d.has_receiver());
    d.params
        .iter()
        .skip(skip)
        .map(|p| explicit_type(p.annotation.as_ref()).unwrap_or_else(TypeExpr::any))
        .collect()
}

fn comparable_return(d: &Declaration) -> TypeExpr {
    explicit_type(d.return_annotation.as_ref()).unwrap_or_else(TypeExpr::any)
}

/// Every method whose own `def` line carries `# type: ignore[override]`
/// becomes a Finding; the comparison against the parent (when it resolves
/// inside the project) is reported as an outcome, never as an error.
pub fn detect_override_suppressions(model: &ProjectModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    for class in &model.classes {
        for m in &class.methods {
            let has_override_ignore = m
                .trailing_ignore
                .as_ref()
                .is_some_and(|i| i.codes.iter().any(|c| c == "override"));
            if !has_override_ignore {
                continue;
            }
            let method_name = m.qualified_name.rsplit('.').next().unwrap_or("");
            let mut ev: Vec<(&str, String)> =
                vec![("child_signature", render_stub_line(m).text)];
            let (outcome, confidence) =
                match resolve_parent_method(model, class, method_name) {
                    ResolveOutcome::Found {
                        parent,
                        parent_class,
                    } => {
                        ev.push(("parent_signature", render_stub_line(parent).text));
                        ev.push(("parent_class", parent_class.qualified_name.clone()));
                        if comparable_params(m) != comparable_params(parent) {
                            (OverrideOutcome::DifferentArgs, Confidence::High)
                        } else if comparable_return(m) != comparable_return(parent) {
                            (OverrideOutcome::DifferentReturnOnly, Confidence::Medium)
                        } else {
                            (OverrideOutcome::IdenticalArgs, Confidence::Medium)
                        }
                    }
                    ResolveOutcome::ParentClassUnresolved { note } => {
                        if let Some(note) = note {
                            ev.push(("note", note));
                        }
                        (OverrideOutcome::ParentClassUnresolved, Confidence::Medium)
                    }
                    ResolveOutcome::MethodNotInAncestors => {
                        (OverrideOutcome::ParentNotFound, Confidence::Medium)
                    }
                };
            ev.push(("outcome", outcome.as_str().to_string()));
            findings.push(Finding {
                pattern: Pattern::Override,
                location: m.location.clone(),
                symbol: m.symbol(),
                confidence,
                evidence: evidence(&ev),
                suggestion: None,
            });
        }
    }
    findings
}

// ---------------------------------------------------------------------------
// PAT_WRAPPER — plain Callable in forwarding wrappers
// ---------------------------------------------------------------------------

/// Functions with a parameter annotated as plain `Callable` (no type
/// arguments) that is only ever called with `*args, **kwargs` catch-alls.
/// Leading explicit positionals before the catch-alls are permitted; a
/// closure calling the captured parameter counts as a call site. One
/// Finding per function, matching the way such wrappers are counted.
pub fn detect_wrapper_functions(model: &ProjectModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    for d in &model.declarations {
        let hit = d.params.iter().find(|p| {
            let bare = p
                .annotation
                .as_ref()
                .is_some_and(|a| a.expr.is_bare_callable());
            if !bare {
                return false;
            }
            match d.body_facts.param_call_sites.get(&p.name) {
                Some(sites) if !sites.is_empty() => sites
                    .iter()
                    .all(|s| s.has_star_args && s.has_double_star_kwargs),
                _ => false,
            }
        });
        let Some(p) = hit else { continue };
        let sites = &d.body_facts.param_call_sites[&p.name];
        let leading: Vec<String> = sites
            .iter()
            .map(|s| s.leading_positional_count.to_string())
            .collect();
        findings.push(Finding {
            pattern: Pattern::Wrapper,
            location: d.location.clone(),
            symbol: d.symbol(),
            confidence: Confidence::High,
            evidence: evidence(&[
                ("parameter", p.name.clone()),
                ("call_sites", sites.len().to_string()),
                ("leading_positionals", leading.join(", ")),
            ]),
            suggestion: None,
        });
    }
    findings
}

// ---------------------------------------------------------------------------
// PAT_DDICT — dependent dictionaries
// ---------------------------------------------------------------------------

/// True for the dictionary shapes counted as Any-valued: bare `Dict`, or
/// `Dict[T, Any]`/`Mapping[T, Any]` with a non-Any key. An explicit
/// `Dict[Any, Any]` is deliberately excluded — nothing there depends on the
/// key, which is the detail-hiding shape, not the record-like one.
fn is_any_valued_dict(t: &TypeExpr) -> bool {
    match dict_value(t) {
        Some((key, value)) => value.is_any() && (t.was_bare || !key.is_any()),
        None => false,
    }
}

/// String-literal keys a parameter was observed used with.
fn observed_keys(d: &Declaration, param: &str) -> Vec<String> {
    let mut keys = BTreeSet::new();
    if let Some(uses) = d.body_facts.param_uses.get(param) {
        for u in uses {
            match u {
                UseKind::SubscriptedWithStringLiteral(k)
                | UseKind::MembershipTestedWithStringLiteral(k) => {
                    keys.insert(k.clone());
                }
                _ => {}
            }
        }
    }
    keys.into_iter().collect()
}

/// Signatures whose parameter or return is an Any-valued dictionary. The
/// base Finding is low confidence; seeing the body read string-literal keys
/// out of the parameter upgrades it to high and records the keys.
pub fn detect_dependent_dicts(model: &ProjectModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    for d in &model.declarations {
        let mut slots: Vec<String> = Vec::new();
        let mut keys: Vec<String> = Vec::new();
        for p in &d.params {
            let matches = explicit_type(p.annotation.as_ref())
                .is_some_and(|t| is_any_valued_dict(&t));
            if matches {
                slots.push(p.name.clone());
                keys.extend(observed_keys(d, &p.name));
            }
        }
        if explicit_type(d.return_annotation.as_ref()).is_some_and(|t| is_any_valued_dict(&t)) {
            slots.push("return".to_string());
        }
        if slots.is_empty() {
            continue;
        }
        keys.sort();
        keys.dedup();
        let confidence = if keys.is_empty() {
            Confidence::Low
        } else {
            Confidence::High
        };
        let mut ev = vec![("slots", slots.join(", "))];
        if !keys.is_empty() {
            ev.push(("keys", keys.join(", ")));
        }
        findings.push(Finding {
            pattern: Pattern::DependentDict,
            location: d.location.clone(),
            symbol: d.symbol(),
            confidence,
            evidence: evidence(&ev),
            suggestion: None,
        });
    }
    findings
}

// ---------------------------------------------------------------------------
// PAT_DETAILS — unconstraining uses of Any parameters
// ---------------------------------------------------------------------------

/// Uses that impose no constraint on the parameter's type arguments:
/// iteration, len(), the read-only dict methods, returning or forwarding
/// the value, and truth tests.
fn is_unconstraining(u: &UseKind) -> bool {
    match u {
        UseKind::Iterated
        | UseKind::LengthTaken
        | UseKind::ReturnedDirectly
        | UseKind::TruthTested
        | UseKind::PassedAlong => true,
        UseKind::MethodCalled(name) => {
            matches!(name.as_str(), "values" | "keys" | "items" | "get" | "copy")
        }
        _ => false,
    }
}

/// Replace each `Any` argument with a type-variable name for the
/// suggestion text: `Dict[Any, Any]` → `Dict[K, V]`, plain `Any` → `T`.
fn typevar_replacement(t: &TypeExpr) -> String {
    match &t.node {
        TypeNode::Any => "T".to_string(),
        TypeNode::Generic { head, args }
            if (head == "Dict" || head == "Mapping") && args.len() == 2 =>
        {
            let k = if args[0].is_any() { "K".to_string() } else { render(&args[0]) };
            let v = if args[1].is_any() { "V".to_string() } else { render(&args[1]) };
            format!("{head}[{k}, {v}]")
        }
        TypeNode::Generic { head, args } => {
            let mut n = 0;
            let rendered: Vec<String> = args
                .iter()
                .map(|a| {
                    if a.is_any() {
                        n += 1;
                        format!("T{n}")
                    } else {
                        render(a)
                    }
                })
                .collect();
            format!("{head}[{}]", rendered.join(", "))
        }
        _ => render(t),
    }
}

/// Parameters typed `Any` (or a generic with `Any` arguments) whose
/// observed uses all fall in the unconstraining set: the annotation hides
/// type details the body never needed hidden, and a type variable would
/// keep the relationship. Requires at least one observed use — an unused
/// parameter says nothing either way.
pub fn detect_detail_hiding(model: &ProjectModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    for d in &model.declarations {
        let skip = usize::from(d.has_receiver());
        for (index, p) in d.params.iter().enumerate().skip(skip) {
            let Some(t) = explicit_type(p.annotation.as_ref()) else {
                continue;
            };
            let eligible = t.is_any()
                || (matches!(t.node, TypeNode::Generic { .. }) && count_any(&t) > 0);
            if !eligible {
                continue;
            }
            let Some(uses) = d.body_facts.param_uses.get(&p.name) else {
                continue;
            };
            if uses.is_empty() || !uses.iter().all(is_unconstraining) {
                continue;
            }
            let mut described: Vec<String> =
                uses.iter().map(|u| format!("{u:?}")).collect();
            described.sort();
            described.dedup();
            findings.push(Finding {
                pattern: Pattern::DetailHiding,
                location: d.location.clone(),
                symbol: d.symbol(),
                confidence: Confidence::Medium,
                evidence: evidence(&[
                    ("parameter", p.name.clone()),
                    ("annotation", render(&t)),
                    ("uses", described.join(", ")),
                ]),
                suggestion: Some(Suggestion {
                    target: SuggestionTarget::Param { index },
                    replacement: typevar_replacement(&t),
                }),
            });
        }
    }
    findings
}

// ---------------------------------------------------------------------------
// PAT_NORETURN — Any on always-raising functions
// ---------------------------------------------------------------------------

/// Functions every path of which raises, yet annotated `-> Any` instead of
/// `NoReturn`. The structural raise analysis is conservative, so a hit is
/// high confidence within that subset.
pub fn detect_any_as_noreturn(model: &ProjectModel) -> Vec<Finding> {
    model
        .declarations
        .iter()
        .filter(|d| explicit_any_return(d) && d.body_facts.all_paths_raise)
        .map(|d| Finding {
            pattern: Pattern::NoReturn,
            location: d.location.clone(),
            symbol: d.symbol(),
            confidence: Confidence::High,
            evidence: evidence(&[("all_paths_raise", "true".to_string())]),
            suggestion: Some(Suggestion {
                target: SuggestionTarget::ReturnType,
                replacement: "NoReturn".to_string(),
            }),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// PAT_TVAR — Any instead of a type variable (experimental)
// ---------------------------------------------------------------------------

/// Indices and names of parameters explicitly annotated exactly `Any`.
fn explicit_any_params(d: &Declaration) -> Vec<&str> {
    d.params
        .iter()
        .filter(|p| explicit_type(p.annotation.as_ref()).is_some_and(|t| t.is_any()))
        .map(|p| p.name.as_str())
        .collect()
}

/// Heuristic for `Any` parameters that behave like a shared type variable:
/// either two `Any` parameters meet in a binary operation or comparison, or
/// a lone `Any` parameter is returned directly from an `-> Any` function.
/// Both rules are guesses about intent, hence low confidence, an
/// `experimental` evidence marker, and exclusion from the default set.
pub fn detect_any_instead_of_typevar(model: &ProjectModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    for d in &model.declarations {
        let any_params = explicit_any_params(d);
        let mut hit: Option<(&str, String)> = None;

        if any_params.len() >= 2 {
            'outer: for p in &any_params {
                if let Some(uses) = d.body_facts.param_uses.get(*p) {
                    for u in uses {
                        if let UseKind::BinaryOpWith(q) = u {
                            if any_params.contains(&q.as_str()) && q != p {
                                let (a, b) = if *p < q.as_str() { (*p, q.as_str()) } else { (q.as_str(), *p) };
                                hit = Some(("binary_op_links_any_params", format!("{a}, {b}")));
                                break 'outer;
                            }
                        }
                    }
                }
            }
        } else if any_params.len() == 1 && explicit_any_return(d) {
            let p = any_params[0];
            let returned = d
                .body_facts
                .param_uses
                .get(p)
                .is_some_and(|uses| uses.contains(&UseKind::ReturnedDirectly));
            if returned {
                hit = Some(("any_param_returned_directly", p.to_string()));
            }
        }

        let Some((rule, parameters)) = hit else { continue };
        findings.push(Finding {
            pattern: Pattern::Tvar,
            location: d.location.clone(),
            symbol: d.symbol(),
            confidence: Confidence::Low,
            evidence: evidence(&[
                ("rule", rule.to_string()),
                ("parameters", parameters),
                ("experimental", "true".to_string()),
            ]),
            suggestion: None,
        });
    }
    findings
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

fn detector_for(pattern: Pattern) -> fn(&ProjectModel) -> Vec<Finding> {
    match pattern {
        Pattern::Tvar => detect_any_instead_of_typevar,
        Pattern::Uvar => detect_unconstrained_typevars,
        Pattern::SelfReturn => detect_any_instead_of_self,
        Pattern::DependentDict => detect_dependent_dicts,
        Pattern::Override => detect_override_suppressions,
        Pattern::Wrapper => detect_wrapper_functions,
        Pattern::DetailHiding => detect_detail_hiding,
        Pattern::NoReturn => detect_any_as_noreturn,
    }
}

/// Run the enabled detectors and merge their findings into the canonical
/// report order: file, line, column, pattern, symbol.
pub fn run_detectors(model: &ProjectModel, enabled: &BTreeSet<Pattern>) -> Vec<Finding> {
    let mut findings: Vec<Finding> = enabled
        .iter()
        .flat_map(|p| detector_for(*p)(model))
        .collect();
    findings.sort_by(|a, b| {
        (&a.location, a.pattern.name(), &a.symbol)
            .cmp(&(&b.location, b.pattern.name(), &b.symbol))
    });
    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::parse_source_file;
    use crate::model::merge_models;

    fn src(lines: &[&str]) -> String {
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }

    fn project(files: &[(&str, &[&str])]) -> ProjectModel {
        let models = files
            .iter()
            .map(|(path, lines)| {
                let m = parse_source_file(path, &src(lines));
                assert!(m.failure.is_none(), "fixture must parse: {:?}", m.failure);
                m
            })
            .collect();
        merge_models("p", models).expect("unique paths")
    }

    fn single(lines: &[&str]) -> ProjectModel {
        project(&[("m.py", lines)])
    }

    fn all_enabled() -> BTreeSet<Pattern> {
        Pattern::all().into_iter().collect()
    }

    #[test]
    fn uvar_fires_only_on_unconstrained_typevars() {
        let model = single(&[
            "from typing import AnyStr, TypeVar",
            "Car = TypeVar('Car')",
            "Plane = TypeVar('Plane', str, bytes)",
            "Boat = TypeVar('Boat', bound=AnyStr)",
        ]);
        let findings = detect_unconstrained_typevars(&model);
        assert_eq!(findings.len(), 1);
        let f = &findings[0];
        assert_eq!(f.symbol, "Car");
        assert_eq!(f.confidence, Confidence::High);
        assert_eq!(f.location.line, 2);
        assert_eq!(
            f.suggestion,
            Some(Suggestion {
                target: SuggestionTarget::TypevarDecl,
                replacement: "TypeVar('Car', bound=...)".to_string(),
            })
        );
    }

    #[test]
    fn self_fires_on_method_returning_receiver_as_any() {
        let model = single(&[
            "from typing import Any",
            "class Shape:",
            "    def move(self, dx: int) -> Any:",
            "        self.x = dx",
            "        return self",
        ]);
        let findings = detect_any_instead_of_self(&model);
        assert_eq!(findings.len(), 1);
        let f = &findings[0];
        assert_eq!(f.symbol, "Shape.move");
        assert_eq!(f.confidence, Confidence::High);
        assert_eq!(
            f.suggestion.as_ref().unwrap().replacement,
            "Self".to_string()
        );
    }

    #[test]
    fn self_requires_explicit_any_return() {
        let typed = single(&[
            "class Shape:",
            "    def move(self) -> 'Shape':",
            "        return self",
        ]);
        assert!(detect_any_instead_of_self(&typed).is_empty());
        let implicit = single(&[
            "class Shape:",
            "    def move(self):",
            "        return self",
        ]);
        assert!(detect_any_instead_of_self(&implicit).is_empty());
    }

    #[test]
    fn self_mixed_return_paths_are_medium() {
        let model = single(&[
            "from typing import Any",
            "class Shape:",
            "    def move(self, flag: bool) -> Any:",
            "        if flag:",
            "            return self",
            "        return None",
        ]);
        let findings = detect_any_instead_of_self(&model);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].confidence, Confidence::Medium);
        assert_eq!(findings[0].evidence["returns_of_first_param"], "1");
        assert_eq!(findings[0].evidence["total_return_statements"], "2");
    }

    #[test]
    fn override_different_args_is_high() {
        let model = single(&[
            "from typing import Union",
            "class BinaryIO:",
            "    def write(self, data: bytes) -> int:",
            "        return 0",
            "class FileOpener(BinaryIO):",
            "    def write(self, data: Union[bytes, bytearray]) -> int:  # type: ignore[override]",
            "        return 1",
        ]);
        let findings = detect_override_suppressions(&model);
        assert_eq!(findings.len(), 1);
        let f = &findings[0];
        assert_eq!(f.symbol, "FileOpener.write");
        assert_eq!(f.confidence, Confidence::High);
        assert_eq!(f.evidence["outcome"], "different_args");
        assert!(f.evidence["parent_signature"].contains("data: bytes"));
        assert!(f.evidence["child_signature"].contains("Union[bytearray, bytes]"));
    }

    #[test]
    fn override_identical_and_return_only_are_medium() {
        let model = single(&[
            "class Base:",
            "    def f(self, x: int) -> int:",
            "        return x",
            "class Same(Base):",
            "    def f(self, x: int) -> int:  # type: ignore[override]",
            "        return x",
            "class Ret(Base):",
            "    def f(self, x: int) -> bool:  # type: ignore[override]",
            "        return True",
        ]);
        let findings = detect_override_suppressions(&model);
        assert_eq!(findings.len(), 2);
        let same = findings.iter().find(|f| f.symbol == "Same.f").unwrap();
        assert_eq!(same.evidence["outcome"], "identical_args");
        assert_eq!(same.confidence, Confidence::Medium);
        let ret = findings.iter().find(|f| f.symbol == "Ret.f").unwrap();
        assert_eq!(ret.evidence["outcome"], "different_return_only");
        assert_eq!(ret.confidence, Confidence::Medium);
    }

    #[test]
    fn override_unresolved_and_missing_parents() {
        let model = single(&[
            "from io import RawIOBase",
            "class A(RawIOBase):",
            "    def write(self, b) -> int:  # type: ignore[override]",
            "        return 0",
            "class Local:",
            "    def g(self) -> None:",
            "        pass",
            "class B(Local):",
            "    def h(self) -> None:  # type: ignore[override]",
            "        pass",
        ]);
        let findings = detect_override_suppressions(&model);
        let a = findings.iter().find(|f| f.symbol == "A.write").unwrap();
        assert_eq!(a.evidence["outcome"], "parent_class_unresolved");
        let b = findings.iter().find(|f| f.symbol == "B.h").unwrap();
        assert_eq!(b.evidence["outcome"], "parent_not_found");
    }

    #[test]
    fn override_requires_the_override_code() {
        let model = single(&[
            "class Base:",
            "    def f(self) -> None:",
            "        pass",
            "class Child(Base):",
            "    def f(self) -> None:  # type: ignore",
            "        pass",
        ]);
        assert!(detect_override_suppressions(&model).is_empty());
    }

    #[test]
    fn wrapper_fires_on_forwarded_bare_callable() {
        let model = single(&[
            "from typing import Callable",
            "def validate_stat(fn: Callable) -> Callable:",
            "    def wrapper(self, stat, *args, **kwargs):",
            "        return fn(self, stat, *args, **kwargs)",
            "    return wrapper",
        ]);
        let findings = detect_wrapper_functions(&model);
        assert_eq!(findings.len(), 1);
        let f = &findings[0];
        assert_eq!(f.symbol, "validate_stat");
        assert_eq!(f.confidence, Confidence::High);
        assert_eq!(f.evidence["parameter"], "fn");
        assert_eq!(f.evidence["call_sites"], "1");
        assert_eq!(f.evidence["leading_positionals"], "2");
    }

    #[test]
    fn wrapper_requires_bare_annotation_and_catch_alls() {
        let typed = single(&[
            "from typing import Callable",
            "def run(fn: Callable[[int], int]) -> int:",
            "    return fn(*[], **{})",
        ]);
        assert!(detect_wrapper_functions(&typed).is_empty());
        let plain_call = single(&[
            "from typing import Callable",
            "def run(fn: Callable) -> int:",
            "    return fn(1, 2)",
        ]);
        assert!(detect_wrapper_functions(&plain_call).is_empty());
        let never_called = single(&[
            "from typing import Callable",
            "def keep(fn: Callable) -> Callable:",
            "    return fn",
        ]);
        assert!(detect_wrapper_functions(&never_called).is_empty());
    }

    #[test]
    fn ddict_upgrades_to_high_on_string_keys() {
        let model = single(&[
            "from typing import Any, Dict",
            "def get_discount(item: Dict[str, Any]) -> float:",
            "    if 'sale' in item:",
            "        return item['price'] * 0.9",
            "    return item['price']",
        ]);
        let findings = detect_dependent_dicts(&model);
        assert_eq!(findings.len(), 1);
        let f = &findings[0];
        assert_eq!(f.confidence, Confidence::High);
        assert_eq!(f.evidence["slots"], "item");
        assert_eq!(f.evidence["keys"], "price, sale");
    }

    #[test]
    fn ddict_signature_only_is_low() {
        let model = single(&[
            "from typing import Any, Mapping",
            "def g(m: Mapping[str, Any]) -> None:",
            "    pass",
        ]);
        let findings = detect_dependent_dicts(&model);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].confidence, Confidence::Low);
    }

    #[test]
    fn ddict_counts_bare_dict_and_returns_but_not_any_keys() {
        let bare = single(&[
            "from typing import Dict",
            "def f(d: Dict) -> None:",
            "    pass",
        ]);
        assert_eq!(detect_dependent_dicts(&bare).len(), 1);

        let ret = single(&[
            "from typing import Any, Dict",
            "def f() -> Dict[str, Any]:",
            "    return {}",
        ]);
        let findings = detect_dependent_dicts(&ret);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].evidence["slots"], "return");

        let typed = single(&[
            "from typing import Dict",
            "def f(d: Dict[str, int]) -> None:",
            "    pass",
        ]);
        assert!(detect_dependent_dicts(&typed).is_empty());

        // Dict[Any, Any] written out in full belongs to the detail-hiding
        // analysis, not the record-like one.
        let all_any = single(&[
            "from typing import Any, Dict",
            "def f(d: Dict[Any, Any]) -> None:",
            "    pass",
        ]);
        assert!(detect_dependent_dicts(&all_any).is_empty());
    }

    #[test]
    fn details_fires_on_read_only_dict_walk() {
        let model = single(&[
            "from typing import Any, Dict",
            "def last_added(dct: Dict[Any, Any]) -> Any:",
            "    return list(dct.values())[-1]",
        ]);
        let findings = detect_detail_hiding(&model);
        assert_eq!(findings.len(), 1);
        let f = &findings[0];
        assert_eq!(f.symbol, "last_added");
        assert_eq!(f.confidence, Confidence::Medium);
        assert_eq!(f.evidence["parameter"], "dct");
        let s = f.suggestion.as_ref().unwrap();
        assert_eq!(s.target, SuggestionTarget::Param { index: 0 });
        assert_eq!(s.replacement, "Dict[K, V]");
    }

    #[test]
    fn details_blocked_by_constraining_uses() {
        let model = single(&[
            "from typing import Any, Dict",
            "def f(dct: Dict[Any, Any]) -> int:",
            "    return dct['k'] + 1",
        ]);
        assert!(detect_detail_hiding(&model).is_empty());
    }

    #[test]
    fn details_needs_any_and_at_least_one_use() {
        let typed = single(&[
            "from typing import Dict",
            "def f(dct: Dict[str, int]) -> None:",
            "    for k in dct:",
            "        pass",
        ]);
        assert!(detect_detail_hiding(&typed).is_empty());
        let unused = single(&[
            "from typing import Any",
            "def f(x: Any) -> None:",
            "    pass",
        ]);
        assert!(detect_detail_hiding(&unused).is_empty());
        let implicit = single(&["def f(x) -> None:", "    return None"]);
        assert!(detect_detail_hiding(&implicit).is_empty());
    }

    #[test]
    fn details_plain_any_suggests_a_typevar() {
        let model = single(&[
            "from typing import Any, List",
            "def head(xs: List[Any]) -> Any:",
            "    if xs:",
            "        return xs",
            "    return xs",
        ]);
        let findings = detect_detail_hiding(&model);
        assert_eq!(findings.len(), 1);
        assert_eq!(
            findings[0].suggestion.as_ref().unwrap().replacement,
            "List[T1]"
        );
    }

    #[test]
    fn noreturn_fires_on_always_raising_any() {
        let model = single(&[
            "from typing import Any",
            "class Proxy:",
            "    def __getattr__(self, item: str) -> Any:",
            "        if item.startswith('x'):",
            "            raise AttributeError(item)",
            "        else:",
            "            raise KeyError(item)",
        ]);
        let findings = detect_any_as_noreturn(&model);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].symbol, "Proxy.__getattr__");
        assert_eq!(
            findings[0].suggestion.as_ref().unwrap().replacement,
            "NoReturn"
        );
    }

    #[test]
    fn noreturn_blocked_by_returns_or_existing_annotation() {
        let returning = single(&[
            "from typing import Any",
            "def f() -> Any:",
            "    if True:",
            "        raise ValueError()",
            "    return 1",
        ]);
        assert!(detect_any_as_noreturn(&returning).is_empty());
        let already = single(&[
            "from typing import NoReturn",
            "def f() -> NoReturn:",
            "    raise ValueError()",
        ]);
        assert!(detect_any_as_noreturn(&already).is_empty());
    }

    #[test]
    fn tvar_links_two_any_params_in_comparison() {
        let model = single(&[
            "from typing import Any",
            "def eq(a: Any, b: Any) -> bool:",
            "    return a == b",
        ]);
        let findings = detect_any_instead_of_typevar(&model);
        assert_eq!(findings.len(), 1);
        let f = &findings[0];
        assert_eq!(f.confidence, Confidence::Low);
        assert_eq!(f.evidence["rule"], "binary_op_links_any_params");
        assert_eq!(f.evidence["parameters"], "a, b");
        assert_eq!(f.evidence["experimental"], "true");
    }

    #[test]
    fn tvar_identity_rule_and_unlinked_params() {
        let id = single(&[
            "from typing import Any",
            "def ident(x: Any) -> Any:",
            "    return x",
        ]);
        let findings = detect_any_instead_of_typevar(&id);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].evidence["rule"], "any_param_returned_directly");

        let unlinked = single(&[
            "from typing import Any",
            "def f(a: Any, b: Any) -> None:",
            "    print(a)",
            "    print(b)",
        ]);
        assert!(detect_any_instead_of_typevar(&unlinked).is_empty());
    }

    #[test]
    fn runner_sorts_and_respects_enabled_set() {
        let model = project(&[
            (
                "b.py",
                &[
                    "from typing import Any",
                    "def eq(a: Any, b: Any) -> bool:",
                    "    return a == b",
                ],
            ),
            ("a.py", &["from typing import TypeVar", "T = TypeVar('T')"]),
        ]);
        let all = run_detectors(&model, &all_enabled());
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].location.file_path, "a.py");
        assert_eq!(all[1].pattern, Pattern::Tvar);

        let default = run_detectors(&model, &Pattern::default_enabled());
        assert_eq!(default.len(), 1);
        assert_eq!(default[0].pattern, Pattern::Uvar);
    }

    #[test]
    fn pattern_names_round_trip() {
        for p in Pattern::all() {
            assert_eq!(p.name().parse::<Pattern>().unwrap(), p);
        }
        assert_eq!("pat_self".parse::<Pattern>().unwrap(), Pattern::SelfReturn);
        assert!("PAT_BOGUS".parse::<Pattern>().is_err());
    }
}
