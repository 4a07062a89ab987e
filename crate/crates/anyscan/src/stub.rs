//! Stub-line rendering, classification, and the distinct-line filter.
//!
//! A declaration is flattened into a one-line stub signature the way
//! `stubgen` would print it. Each line is classified by where its `Any`
//! occurrences sit, and a project's lines are then filtered: signatures whose
//! only `Any` is an unannotated receiver are dropped as uninteresting, and
//! exact duplicate lines are collapsed to their first occurrence.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::location::SourceLocation;
use crate::model::{Declaration, ParamKind, Parameter, VariableDecl};
use crate::typeexpr::{count_any, normalize, render, CallableParams, TypeExpr, TypeNode};

/// Where the `Any` occurrences of one signature live.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ClassificationFlag {
    /// The only `Any` in the signature is parameter 0 of a method —
    /// almost always an unannotated `self`.
    FirstParamOnly,
    /// Some parameter carries `Any` inside a `Callable[...]` type.
    InCallableArg,
    /// Some parameter is a `Dict`/`Mapping` with `Any` in its value type.
    InDictValue,
    /// `Any` occurs somewhere not covered above (including return types).
    OtherPosition,
    /// The signature contains no `Any` at all.
    None,
}

impl ClassificationFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassificationFlag::FirstParamOnly => "first_param_only",
            ClassificationFlag::InCallableArg => "in_callable_arg",
            ClassificationFlag::InDictValue => "in_dict_value",
            ClassificationFlag::OtherPosition => "other_position",
            ClassificationFlag::None => "none",
        }
    }

    pub fn all() -> [ClassificationFlag; 5] {
        [
            ClassificationFlag::FirstParamOnly,
            ClassificationFlag::InCallableArg,
            ClassificationFlag::InDictValue,
            ClassificationFlag::OtherPosition,
            ClassificationFlag::None,
        ]
    }
}

/// The full classification of a signature. A signature may match several
/// categories at once (`Dict[str, Callable[[Any], int]]` is both a dict
/// value and a callback argument), so this is a set, not a single flag.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnyClassification {
    pub flags: BTreeSet<ClassificationFlag>,
}

impl AnyClassification {
    pub fn of(flags: impl IntoIterator<Item = ClassificationFlag>) -> Self {
        Self {
            flags: flags.into_iter().collect(),
        }
    }

    /// True when the signature contains no `Any`.
    pub fn is_none(&self) -> bool {
        self.flags.contains(&ClassificationFlag::None)
    }

    /// True when the classification is exactly `{first_param_only}` —
    /// the set the distinct-line filter drops.
    pub fn is_first_param_only(&self) -> bool {
        self.flags.len() == 1 && self.flags.contains(&ClassificationFlag::FirstParamOnly)
    }
}

impl fmt::Display for AnyClassification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for flag in &self.flags {
            if !first {
                write!(f, "+")?;
            }
            write!(f, "{}", flag.as_str())?;
            first = false;
        }
        Ok(())
    }
}

/// One canonical rendered signature, the unit the distinct-line counts
/// are taken over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubLine {
    /// One-line rendering, e.g. `def eq(a: Any, b: Any) -> bool: ...`.
    pub text: String,
    pub qualified_name: String,
    pub location: SourceLocation,
    pub classification: AnyClassification,
}

/// Result of the distinct-line filter.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub kept: Vec<StubLine>,
    pub dropped_first_param_only: usize,
    pub dropped_duplicates: usize,
}

// ---------------------------------------------------------------------------
// Signature slots
// ---------------------------------------------------------------------------

/// The normalized type of one annotation slot. A missing annotation
/// materializes the dynamic type.
fn slot_type(annotation: Option<&crate::model::Annotation>) -> TypeExpr {
    match annotation {
        Some(a) => normalize(&a.expr),
        None => TypeExpr::any(),
    }
}

/// Normalized parameter types in declaration order, plus the return type.
fn signature_slots(d: &Declaration) -> (Vec<TypeExpr>, TypeExpr) {
    let params = d
        .params
        .iter()
        .map(|p| slot_type(p.annotation.as_ref()))
        .collect();
    let ret = slot_type(d.return_annotation.as_ref());
    (params, ret)
}

/// Count `Any` occurrences strictly inside `Callable[...]` types.
fn any_under_callable(t: &TypeExpr) -> usize {
    fn walk(t: &TypeExpr, under: bool) -> usize {
        match &t.node {
            TypeNode::Any => usize::from(under),
            TypeNode::Generic { args, .. } => args.iter().map(|a| walk(a, under)).sum(),
            TypeNode::Callable { params, ret } => {
                let from_params = match params {
                    CallableParams::Ellipsis => 0,
                    CallableParams::List(list) => list.iter().map(|a| walk(a, true)).sum(),
                };
                from_params + walk(ret, true)
            }
            TypeNode::Union(members) => members.iter().map(|m| walk(m, under)).sum(),
            TypeNode::Forward(inner) => walk(inner, under),
            _ => 0,
        }
    }
    walk(t, false)
}

/// `Any` occurrences in the value type of a top-level `Dict`/`Mapping`.
fn any_in_dict_value(t: &TypeExpr) -> usize {
    match &t.node {
        TypeNode::Generic { head, args }
            if (head == "Dict" || head == "Mapping") && args.len() == 2 =>
        {
            count_any(&args[1])
        }
        _ => 0,
    }
}

/// Classify one signature by where its `Any` occurrences live.
///
/// Missing annotations are materialized as `Any` first, so an unannotated
/// `self` is visible to the `first_param_only` test. Category predicates are
/// independent: a single site may set both `in_callable_arg` and
/// `in_dict_value`; sites covered by neither become `other_position`.
/// Return-type `Any` is always `other_position` — the callback and dict
/// categories describe parameters.
pub fn classify_signature(d: &Declaration) -> AnyClassification {
    let (params, ret) = signature_slots(d);
    let param_counts: Vec<usize> = params.iter().map(count_any).collect();
    let ret_count = count_any(&ret);
    let total: usize = param_counts.iter().sum::<usize>() + ret_count;

    if total == 0 {
        return AnyClassification::of([ClassificationFlag::None]);
    }
    if d.is_method && ret_count == 0 && param_counts.first() == Some(&total) {
        return AnyClassification::of([ClassificationFlag::FirstParamOnly]);
    }

    let mut flags = BTreeSet::new();
    for t in &params {
        let in_callable = any_under_callable(t);
        let in_dict = any_in_dict_value(t);
        if in_callable > 0 {
            flags.insert(ClassificationFlag::InCallableArg);
        }
        if in_dict > 0 {
            flags.insert(ClassificationFlag::InDictValue);
        }
        // Sites covered by neither predicate. The two regions overlap when a
        // dict value holds a callable, so subtract the union, not the sum.
        let covered = {
            let overlap = match &t.node {
                TypeNode::Generic { head, args }
                    if (head == "Dict" || head == "Mapping") && args.len() == 2 =>
                {
                    any_under_callable(&args[1])
                }
                _ => 0,
            };
            in_callable + in_dict - overlap
        };
        if count_any(t) > covered {
            flags.insert(ClassificationFlag::OtherPosition);
        }
    }
    if ret_count > 0 {
        flags.insert(ClassificationFlag::OtherPosition);
    }
    AnyClassification { flags }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn render_param(p: &Parameter, bare_receiver: bool) -> String {
    let prefix = match p.kind {
        ParamKind::VarPositional => "*",
        ParamKind::VarKeyword => "**",
        _ => "",
    };
    if bare_receiver {
        return format!("{prefix}{}", p.name);
    }
    let ty = slot_type(p.annotation.as_ref());
    format!("{prefix}{}: {}", p.name, render(&ty))
}

/// Render a declaration as one canonical stub line.
///
/// Types are printed in normalized form and missing annotations as `Any`,
/// with one exception: a method receiver stays bare (`self`, not
/// `self: Any`), matching how stub generators print it. Classification still
/// sees the receiver's implicit `Any`, which is what lets the filter drop
/// these lines. Defaults are not part of the type signature and are omitted.
pub fn render_stub_line(d: &Declaration) -> StubLine {
    let name = d.qualified_name.rsplit('.').next().unwrap_or("");
    let receiver = d.has_receiver();

    let mut parts: Vec<String> = Vec::new();
    let mut seen_vararg = false;
    for (i, p) in d.params.iter().enumerate() {
        if p.kind == ParamKind::KeywordOnly && !seen_vararg {
            parts.push("*".to_string());
            seen_vararg = true;
        }
        if p.kind == ParamKind::VarPositional {
            seen_vararg = true;
        }
        parts.push(render_param(p, receiver && i == 0));
    }

    let ret = slot_type(d.return_annotation.as_ref());
    let text = format!("def {name}({}) -> {}: ...", parts.join(", "), render(&ret));
    StubLine {
        text,
        qualified_name: d.qualified_name.clone(),
        location: d.location.clone(),
        classification: classify_signature(d),
    }
}

/// Render an annotated module/class variable as `name: T`.
pub fn render_variable_line(v: &VariableDecl) -> StubLine {
    let name = v.qualified_name.rsplit('.').next().unwrap_or("");
    let ty = normalize(&v.annotation.expr);
    let classification = if count_any(&ty) == 0 {
        AnyClassification::of([ClassificationFlag::None])
    } else {
        AnyClassification::of([ClassificationFlag::OtherPosition])
    };
    StubLine {
        text: format!("{name}: {}", render(&ty)),
        qualified_name: v.qualified_name.clone(),
        location: v.location.clone(),
        classification,
    }
}

// ---------------------------------------------------------------------------
// Distinct-line filter
// ---------------------------------------------------------------------------

/// Filter one project's stub lines down to the distinct interesting ones.
///
/// First drops every line classified exactly `{first_param_only}`, then
/// collapses exact duplicate texts, keeping the first occurrence in
/// file/line order. `kept + dropped_first_param_only + dropped_duplicates`
/// always equals the input length.
pub fn filter_pipeline(lines: Vec<StubLine>) -> FilterOutcome {
    let mut lines = lines;
    lines.sort_by(|a, b| {
        (&a.location, &a.qualified_name).cmp(&(&b.location, &b.qualified_name))
    });

    let mut outcome = FilterOutcome::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for line in lines {
        if line.classification.is_first_param_only() {
            outcome.dropped_first_param_only += 1;
        } else if !seen.insert(line.text.clone()) {
            outcome.dropped_duplicates += 1;
        } else {
            outcome.kept.push(line);
        }
    }
    outcome
}
