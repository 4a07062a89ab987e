//! The immutable per-project model produced by extraction: declarations,
//! classes, type variables, annotated variables, ignore comments, and
//! import aliases.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::location::SourceLocation;
use crate::typeexpr::TypeExpr;

/// How a parameter is passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Positional,
    KeywordOnly,
    VarPositional,
    VarKeyword,
}

/// An annotation as written plus its parsed form.
#[derive(Debug, Clone)]
pub struct Annotation {
    /// The source text, whitespace-collapsed.
    pub raw: String,
    pub expr: TypeExpr,
}

/// One parameter of a declaration.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub kind: ParamKind,
    pub annotation: Option<Annotation>,
    /// True exactly when no annotation is present; such a position receives
    /// the dynamic type.
    pub is_implicit_any: bool,
}

impl Parameter {
    pub fn new(name: impl Into<String>, kind: ParamKind, annotation: Option<Annotation>) -> Self {
        let is_implicit_any = annotation.is_none();
        Self {
            name: name.into(),
            kind,
            annotation,
            is_implicit_any,
        }
    }
}

/// How a parameter is used inside the function body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UseKind {
    /// `for x in p`, comprehension iteration.
    Iterated,
    /// `len(p)`.
    LengthTaken,
    /// `p.m(...)`.
    MethodCalled(String),
    /// `p["key"]` (read, write, or delete) with a string-literal key.
    SubscriptedWithStringLiteral(String),
    /// `p[expr]` with a non-literal key.
    SubscriptedOther,
    /// `"key" in p` / `"key" not in p`.
    MembershipTestedWithStringLiteral(String),
    /// `p <op> q` or `p <cmp> q` where `q` is another parameter.
    BinaryOpWith(String),
    /// `return p`.
    ReturnedDirectly,
    /// `p` passed as a plain argument to some call.
    PassedAlong,
    /// `if p:`, `while p:`, `assert p`, `not p`, boolean operands.
    TruthTested,
    /// `p.attr = value`.
    AttributeSet(String),
    /// Anything else (calls of `p` itself, arithmetic with non-parameters,
    /// attribute reads, ...); treated as a constraining use.
    Other,
}

/// The shape of one call of a callable parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallShape {
    pub has_star_args: bool,
    pub has_double_star_kwargs: bool,
    pub leading_positional_count: u32,
}

/// Body-level facts a detector may consult. All counts ignore nested
/// function bodies; parameter uses and call sites descend into them (a
/// closure capturing the parameter still uses it) unless the inner function
/// rebinds the name.
#[derive(Debug, Clone, Default)]
pub struct BodyFacts {
    pub returns_of_first_param: u32,
    pub total_return_statements: u32,
    pub has_yield: bool,
    pub all_paths_raise: bool,
    pub param_uses: BTreeMap<String, Vec<UseKind>>,
    pub param_call_sites: BTreeMap<String, Vec<CallShape>>,
}

/// An extracted function or method.
#[derive(Debug, Clone)]
pub struct Declaration {
    /// Dotted path: `module.Class.method`, nested defs as `outer.<locals>.inner`.
    pub qualified_name: String,
    pub params: Vec<Parameter>,
    pub return_annotation: Option<Annotation>,
    /// True when the def sits directly in a class body.
    pub is_method: bool,
    pub decorators: Vec<String>,
    pub body_facts: BodyFacts,
    pub location: SourceLocation,
    pub trailing_ignore: Option<IgnoreComment>,
}

impl Declaration {
    /// True when the first parameter is a receiver (`self`/`cls`):
    /// a method not declared `@staticmethod`.
    pub fn has_receiver(&self) -> bool {
        self.is_method
            && !self
                .decorators
                .iter()
                .any(|d| d == "staticmethod" || d.ends_with(".staticmethod"))
            && !self.params.is_empty()
            && matches!(self.params[0].kind, ParamKind::Positional)
    }

    /// The name relative to its module: `Class.method` rather than
    /// `pkg.mod.Class.method`. Reports show the file alongside, so the
    /// module prefix would only repeat it.
    pub fn symbol(&self) -> String {
        symbol_for(&self.qualified_name, &self.location.file_path)
    }
}

/// Strip the module prefix (derived from `file_path`) off a qualified name.
pub fn symbol_for(qualified_name: &str, file_path: &str) -> String {
    let module = module_name_for(file_path);
    if module.is_empty() {
        return qualified_name.to_string();
    }
    match qualified_name.strip_prefix(&format!("{module}.")) {
        Some(rest) => rest.to_string(),
        None => qualified_name.to_string(),
    }
}

/// Dotted module name for a project-relative path:
/// `pkg/mod.py` → `pkg.mod`, `pkg/__init__.py` → `pkg`.
pub fn module_name_for(file_path: &str) -> String {
    let no_ext = file_path
        .strip_suffix(".pyi")
        .or_else(|| file_path.strip_suffix(".py"))
        .unwrap_or(file_path);
    let dotted: String = no_ext.replace('/', ".");
    let trimmed = dotted
        .strip_suffix(".__init__")
        .map(str::to_string)
        .unwrap_or(dotted);
    if trimmed == "__init__" {
        String::new()
    } else {
        trimmed
    }
}

/// An extracted class.
#[derive(Debug, Clone)]
pub struct ClassDecl {
    pub qualified_name: String,
    /// Base expressions as dotted names (import aliases resolved; a
    /// subscripted base keeps only its head name). Non-name bases are
    /// dropped — they cannot be resolved within the project anyway.
    pub base_names: Vec<String>,
    /// Defs directly in the class body.
    pub methods: Vec<Declaration>,
    pub location: SourceLocation,
}

impl ClassDecl {
    /// The class's own (unqualified) name.
    pub fn name(&self) -> &str {
        self.qualified_name
            .rsplit('.')
            .next()
            .unwrap_or(&self.qualified_name)
    }

    /// Find a direct method by its unqualified name.
    pub fn method(&self, name: &str) -> Option<&Declaration> {
        self.methods
            .iter()
            .find(|m| m.qualified_name.rsplit('.').next() == Some(name))
    }
}

/// An `X = TypeVar('X', ...)` assignment.
#[derive(Debug, Clone)]
pub struct TypeVarDecl {
    pub target_name: String,
    pub declared_name: String,
    /// Positional constraint types, as written.
    pub constraints: Vec<String>,
    /// The `bound=` argument, as written.
    pub bound: Option<String>,
    pub location: SourceLocation,
}

impl TypeVarDecl {
    /// Neither value constraints nor an upper bound.
    pub fn is_unconstrained(&self) -> bool {
        self.constraints.is_empty() && self.bound.is_none()
    }
}

/// A `# type: ignore[...]` comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IgnoreComment {
    /// Lowercased error codes; empty for the bare form.
    pub codes: Vec<String>,
    pub location: SourceLocation,
}

/// A module- or class-scope annotated variable (`name: T` stub lines).
#[derive(Debug, Clone)]
pub struct VariableDecl {
    pub qualified_name: String,
    pub annotation: Annotation,
    pub location: SourceLocation,
}

/// A parse failure recorded instead of raised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub file_path: String,
    pub reason: String,
}

/// The per-file slice of a [`ProjectModel`].
#[derive(Debug, Clone, Default)]
pub struct FileModel {
    pub file_path: String,
    pub module_name: String,
    pub failure: Option<ParseFailure>,
    pub declarations: Vec<Declaration>,
    pub classes: Vec<ClassDecl>,
    pub typevars: Vec<TypeVarDecl>,
    pub variables: Vec<VariableDecl>,
    pub ignores: Vec<IgnoreComment>,
    pub import_aliases: BTreeMap<String, String>,
}

impl FileModel {
    pub fn failed(file_path: &str, reason: impl Into<String>) -> Self {
        Self {
            file_path: file_path.to_string(),
            module_name: module_name_for(file_path),
            failure: Some(ParseFailure {
                file_path: file_path.to_string(),
                reason: reason.into(),
            }),
            ..Self::default()
        }
    }
}

/// Everything extracted from one project. Immutable after [`merge_models`];
/// all lists sorted by (file, line), so iteration — and every report built
/// from it — is deterministic.
#[derive(Debug, Clone, Default)]
pub struct ProjectModel {
    pub project_id: String,
    pub files_parsed: u32,
    pub files_failed: u32,
    pub declarations: Vec<Declaration>,
    pub classes: Vec<ClassDecl>,
    pub typevars: Vec<TypeVarDecl>,
    pub variables: Vec<VariableDecl>,
    pub ignores: Vec<IgnoreComment>,
    /// Union of per-file alias maps (first file wins on conflicts); kept for
    /// inspection — annotation parsing already used the per-file maps.
    pub import_aliases: BTreeMap<String, String>,
    pub failures: Vec<ParseFailure>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MergeError {
    #[error("two file models share the path `{0}`")]
    DuplicatePath(String),
}

/// Fold per-file models into a project model. Deterministic: the result is
/// independent of input order because every list is re-sorted by location.
pub fn merge_models(
    project_id: impl Into<String>,
    models: Vec<FileModel>,
) -> Result<ProjectModel, MergeError> {
    let mut models = models;
    models.sort_by(|a, b| a.file_path.cmp(&b.file_path));
    for pair in models.windows(2) {
        if pair[0].file_path == pair[1].file_path {
            return Err(MergeError::DuplicatePath(pair[0].file_path.clone()));
        }
    }

    let mut project = ProjectModel {
        project_id: project_id.into(),
        ..ProjectModel::default()
    };
    for file in models {
        if let Some(failure) = file.failure {
            project.files_failed += 1;
            project.failures.push(failure);
            continue;
        }
        project.files_parsed += 1;
        project.declarations.extend(file.declarations);
        project.classes.extend(file.classes);
        project.typevars.extend(file.typevars);
        project.variables.extend(file.variables);
        project.ignores.extend(file.ignores);
        for (alias, target) in file.import_aliases {
            project.import_aliases.entry(alias).or_insert(target);
        }
    }

    let by_location =
        |loc: &SourceLocation| (loc.file_path.clone(), loc.line, loc.column);
    project
        .declarations
        .sort_by_key(|d| (by_location(&d.location), d.qualified_name.clone()));
    project
        .classes
        .sort_by_key(|c| (by_location(&c.location), c.qualified_name.clone()));
    project
        .typevars
        .sort_by_key(|t| (by_location(&t.location), t.target_name.clone()));
    project
        .variables
        .sort_by_key(|v| (by_location(&v.location), v.qualified_name.clone()));
    project.ignores.sort_by_key(|i| by_location(&i.location));
    project.failures.sort_by_key(|f| f.file_path.clone());
    Ok(project)
}

/// The result of looking a method up in a class's ancestry.
#[derive(Debug)]
pub enum ResolveOutcome<'a> {
    /// The nearest ancestor defining the method.
    Found {
        parent: &'a Declaration,
        parent_class: &'a ClassDecl,
    },
    /// Some base could not be resolved within the project (externally
    /// imported, or a base cycle — see `note`).
    ParentClassUnresolved { note: Option<String> },
    /// Every ancestor resolved, none defines the method.
    MethodNotInAncestors,
}

/// Search a class's ancestors depth-first, left-to-right over `base_names`,
/// for the nearest definition of `method_name`. Bases resolve by suffix
/// match on qualified class names within the project (same-module candidates
/// preferred); bases that match nothing make the result
/// `ParentClassUnresolved` unless an ancestor with the method is found first.
pub fn resolve_parent_method<'a>(
    model: &'a ProjectModel,
    class: &ClassDecl,
    method_name: &str,
) -> ResolveOutcome<'a> {
    let mut visited: Vec<String> = vec![class.qualified_name.clone()];
    let mut saw_unresolved = false;
    let mut cycle_note: Option<String> = None;

    fn search<'a>(
        model: &'a ProjectModel,
        class: &ClassDecl,
        method_name: &str,
        visited: &mut Vec<String>,
        saw_unresolved: &mut bool,
        cycle_note: &mut Option<String>,
    ) -> Option<(&'a Declaration, &'a ClassDecl)> {
        for base in &class.base_names {
            let Some(parent_class) = resolve_base(model, class, base) else {
                *saw_unresolved = true;
                continue;
            };
            if visited.contains(&parent_class.qualified_name) {
                *saw_unresolved = true;
                *cycle_note = Some(format!(
                    "base-class cycle through `{}`",
                    parent_class.qualified_name
                ));
                continue;
            }
            visited.push(parent_class.qualified_name.clone());
            if let Some(decl) = parent_class.method(method_name) {
                return Some((decl, parent_class));
            }
            if let Some(found) = search(
                model,
                parent_class,
                method_name,
                visited,
                saw_unresolved,
                cycle_note,
            ) {
                return Some(found);
            }
        }
        None
    }

    match search(
        model,
        class,
        method_name,
        &mut visited,
        &mut saw_unresolved,
        &mut cycle_note,
    ) {
        Some((parent, parent_class)) => ResolveOutcome::Found {
            parent,
            parent_class,
        },
        None if saw_unresolved => ResolveOutcome::ParentClassUnresolved { note: cycle_note },
        None => ResolveOutcome::MethodNotInAncestors,
    }
}

/// Resolve a base name to a project class by suffix match on qualified
/// names. Candidates in the referencing class's own module win; remaining
/// ties break toward the lexicographically smallest qualified name.
fn resolve_base<'a>(
    model: &'a ProjectModel,
    from: &ClassDecl,
    base: &str,
) -> Option<&'a ClassDecl> {
    let own_module = from
        .qualified_name
        .rsplit_once('.')
        .map(|(prefix, _)| prefix)
        .unwrap_or("");
    let suffix = format!(".{base}");
    let mut candidates: Vec<&ClassDecl> = model
        .classes
        .iter()
        .filter(|c| c.qualified_name == base || c.qualified_name.ends_with(&suffix))
        .collect();
    candidates.sort_by_key(|c| {
        let same_module = c
            .qualified_name
            .rsplit_once('.')
            .map(|(prefix, _)| prefix)
            .unwrap_or("")
            == own_module;
        (!same_module, c.qualified_name.clone())
    });
    candidates.into_iter().next()
}
