//! The Python front end: per-file extraction of declarations, classes,
//! TypeVar assignments, annotated variables, imports, and ignore comments.
//!
//! Extraction is a two-pass walk over the AST. The first pass collects
//! import aliases and TypeVar names so annotation parsing can resolve
//! `t.Any` and distinguish type variables from plain names; the second
//! builds the [`FileModel`]. Parsing never fails past the file boundary:
//! syntax errors (and, as a safety net, parser panics) produce a model
//! marked failed.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::AssertUnwindSafe;
use std::sync::LazyLock;

use regex::Regex;
use rustpython_parser::ast::Ranged;
use rustpython_parser::{ast, lexer, Mode, Parse, Tok};

use crate::location::SourceLocation;
use crate::model::{
    module_name_for, Annotation, BodyFacts, CallShape, ClassDecl, Declaration, FileModel,
    IgnoreComment, Parameter, ParamKind, TypeVarDecl, UseKind, VariableDecl,
};
use crate::typeexpr::{collapse_ws, convert_expr, dotted_name, ParseContext};

/// Parse one source file into its model slice. Never panics and never
/// returns an error: parse failures are recorded in the model.
pub fn parse_source_file(path: &str, source: &str) -> FileModel {
    let result = std::panic::catch_unwind(AssertUnwindSafe(|| extract_file(path, source)));
    match result {
        Ok(model) => model,
        Err(_) => FileModel::failed(path, "internal parser panic"),
    }
}

/// Byte-level entry point: rejects non-UTF-8 content as a failed file and
/// otherwise defers to [`parse_source_file`]. This is the boundary the
/// robustness guarantee is stated against — arbitrary bytes in, model out.
pub fn parse_source_bytes(path: &str, bytes: &[u8]) -> FileModel {
    match std::str::from_utf8(bytes) {
        Ok(source) => parse_source_file(path, source),
        Err(err) => FileModel::failed(path, format!("not valid UTF-8: {err}")),
    }
}

fn extract_file(path: &str, source: &str) -> FileModel {
    let source = source.strip_prefix('\u{feff}').unwrap_or(source);
    let suite = match ast::Suite::parse(source, path) {
        Ok(suite) => suite,
        Err(err) => return FileModel::failed(path, err.to_string()),
    };

    let module_name = module_name_for(path);
    let mut ctx = ParseContext::default();
    collect_context(&suite, &mut ctx);

    let ignores: Vec<IgnoreComment> = scan_ignore_comments(source)
        .into_iter()
        .map(|c| IgnoreComment {
            codes: c.codes,
            location: c.location.with_file(path),
        })
        .collect();

    let mut extractor = Extractor {
        src: source,
        file_path: path,
        lines: LineIndex::new(source),
        ctx,
        ignores: &ignores,
        declarations: Vec::new(),
        classes: Vec::new(),
        typevars: Vec::new(),
        variables: Vec::new(),
    };
    extractor.walk_block(&suite, &module_name, Scope::Module);
    let Extractor {
        declarations,
        classes,
        typevars,
        variables,
        ctx,
        ..
    } = extractor;

    FileModel {
        file_path: path.to_string(),
        module_name,
        failure: None,
        declarations,
        classes,
        typevars,
        variables,
        ignores,
        import_aliases: ctx.aliases,
    }
}

/// Resolve import aliases for an already-built file model. Exposed mostly
/// for inspection; extraction already applies the map while parsing.
pub fn resolve_import_aliases(model: &FileModel) -> BTreeMap<String, String> {
    model.import_aliases.clone()
}

// ---------------------------------------------------------------------------
// Ignore comments
// ---------------------------------------------------------------------------

static IGNORE_HEAD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^#\s*type:\s*ignore").expect("static regex"));

/// Scan `# type: ignore[...]` comments. Comments are taken from the lexer
/// (so string literals cannot produce false positives); if the file does
/// not lex, a plain line scan is used instead. Locations carry an empty
/// file path — callers attribute them to a file.
pub fn scan_ignore_comments(source: &str) -> Vec<IgnoreComment> {
    let source = source.strip_prefix('\u{feff}').unwrap_or(source);
    match lexed_comments(source) {
        Some(comments) => {
            let lines = LineIndex::new(source);
            comments
                .into_iter()
                .filter_map(|(text, offset)| {
                    parse_ignore_comment(&text).map(|codes| {
                        let (line, column) = lines.line_col(source, offset);
                        IgnoreComment {
                            codes,
                            location: SourceLocation::new("", line, column),
                        }
                    })
                })
                .collect()
        }
        None => scan_lines_fallback(source),
    }
}

/// All comment tokens with their byte offsets, or `None` if lexing fails.
fn lexed_comments(source: &str) -> Option<Vec<(String, usize)>> {
    let mut comments = Vec::new();
    for item in lexer::lex(source, Mode::Module) {
        match item {
            Ok((Tok::Comment(text), range)) => {
                comments.push((text, range.start().to_usize()));
            }
            Ok(_) => {}
            Err(_) => return None,
        }
    }
    Some(comments)
}

/// Line-oriented fallback for files the lexer rejects. The first `#` on a
/// line is taken as the comment start; inside such files a string literal
/// containing `# type: ignore` could in principle be misread, which is
/// acceptable for content that is not valid Python to begin with.
fn scan_lines_fallback(source: &str) -> Vec<IgnoreComment> {
    let mut found = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let Some(hash) = line.find('#') else { continue };
        let Some(codes) = parse_ignore_comment(&line[hash..]) else {
            continue;
        };
        let column = line[..hash].chars().count() as u32;
        found.push(IgnoreComment {
            codes,
            location: SourceLocation::new("", idx as u32 + 1, column),
        });
    }
    found
}

/// Decide whether a comment is a `type: ignore` and extract its codes.
///
/// Accepted: `# type: ignore`, `#type:ignore`, `# type:  ignore [a, b]`,
/// a bare ignore followed by whitespace-separated prose or a second `#`
/// comment. Rejected: `# type: ignored` (the word continues) and bracketed
/// forms followed by junk (`[override]extra`), which checkers treat as
/// malformed suppressions.
fn parse_ignore_comment(text: &str) -> Option<Vec<String>> {
    let matched = IGNORE_HEAD.find(text)?;
    let tail = &text[matched.end()..];
    if tail.is_empty() {
        return Some(Vec::new());
    }
    let first = tail.chars().next().expect("non-empty tail");
    if !first.is_whitespace() && first != '[' && first != '#' {
        return None;
    }
    let after_ws = tail.trim_start();
    if let Some(bracketed) = after_ws.strip_prefix('[') {
        let close = bracketed.find(']')?;
        let rest = bracketed[close + 1..].trim_start();
        if !rest.is_empty() && !rest.starts_with('#') {
            return None;
        }
        let codes = bracketed[..close]
            .split(',')
            .map(|c| c.trim().to_lowercase())
            .filter(|c| !c.is_empty())
            .collect();
        return Some(codes);
    }
    Some(Vec::new())
}

// ---------------------------------------------------------------------------
// Line index
// ---------------------------------------------------------------------------

/// Byte-offset → (1-based line, 0-based character column) conversion.
struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(source: &str) -> Self {
        let mut starts = vec![0];
        for (i, b) in source.bytes().enumerate() {
            if b == b'\n' {
                starts.push(i + 1);
            }
        }
        Self { starts }
    }

    fn line_col(&self, source: &str, offset: usize) -> (u32, u32) {
        let offset = offset.min(source.len());
        let line_idx = self.starts.partition_point(|&s| s <= offset) - 1;
        let column = source[self.starts[line_idx]..offset].chars().count();
        (line_idx as u32 + 1, column as u32)
    }

    fn line_of(&self, source: &str, offset: usize) -> u32 {
        self.line_col(source, offset).0
    }
}

// ---------------------------------------------------------------------------
// Pass 1: aliases and TypeVar names
// ---------------------------------------------------------------------------

fn canonical_module(name: &str) -> &str {
    if name == "typing_extensions" {
        "typing"
    } else {
        name
    }
}

fn resolve_alias_path(path: &str, aliases: &BTreeMap<String, String>) -> String {
    let (head, rest) = match path.split_once('.') {
        Some((h, r)) => (h, Some(r)),
        None => (path, None),
    };
    match (aliases.get(head), rest) {
        (Some(target), Some(r)) => format!("{target}.{r}"),
        (Some(target), None) => target.clone(),
        (None, _) => path.to_string(),
    }
}

fn collect_context(stmts: &[ast::Stmt], ctx: &mut ParseContext) {
    for stmt in stmts {
        match stmt {
            ast::Stmt::Import(imp) => {
                for alias in &imp.names {
                    match &alias.asname {
                        Some(local) => {
                            ctx.aliases.insert(
                                local.to_string(),
                                canonical_module(alias.name.as_str()).to_string(),
                            );
                        }
                        None => {
                            let head = alias
                                .name
                                .as_str()
                                .split('.')
                                .next()
                                .unwrap_or(alias.name.as_str());
                            ctx.aliases
                                .insert(head.to_string(), canonical_module(head).to_string());
                        }
                    }
                }
            }
            ast::Stmt::ImportFrom(imp) => {
                // Relative imports cannot be canonicalized without package
                // layout knowledge; leave those names unmapped.
                let level = imp.level.map(|l| l.to_u32()).unwrap_or(0);
                let Some(module) = imp.module.as_ref().filter(|_| level == 0) else {
                    continue;
                };
                let module = canonical_module(module.as_str());
                for alias in &imp.names {
                    if alias.name.as_str() == "*" {
                        continue;
                    }
                    let local = alias
                        .asname
                        .as_ref()
                        .map(|a| a.as_str())
                        .unwrap_or(alias.name.as_str());
                    ctx.aliases
                        .insert(local.to_string(), format!("{module}.{}", alias.name));
                }
            }
            ast::Stmt::Assign(assign) => {
                if let Some(parts) = recognize_typevar(assign, &ctx.aliases) {
                    ctx.typevars.insert(parts.target.to_string());
                }
            }
            ast::Stmt::ClassDef(class) => collect_context(&class.body, ctx),
            ast::Stmt::If(stmt) => {
                collect_context(&stmt.body, ctx);
                collect_context(&stmt.orelse, ctx);
            }
            ast::Stmt::Try(stmt) => {
                collect_context(&stmt.body, ctx);
                for handler in &stmt.handlers {
                    let ast::ExceptHandler::ExceptHandler(h) = handler;
                    collect_context(&h.body, ctx);
                }
                collect_context(&stmt.orelse, ctx);
                collect_context(&stmt.finalbody, ctx);
            }
            _ => {}
        }
    }
}

struct TypeVarParts<'a> {
    target: &'a str,
    declared: String,
    constraints: Vec<&'a ast::Expr>,
    bound: Option<&'a ast::Expr>,
}

/// Recognize `X = TypeVar('X', ...)`, including aliased or fully qualified
/// spellings of `TypeVar` and the unimported one common in excerpts.
fn recognize_typevar<'a>(
    assign: &'a ast::StmtAssign,
    aliases: &BTreeMap<String, String>,
) -> Option<TypeVarParts<'a>> {
    let [target] = assign.targets.as_slice() else {
        return None;
    };
    let ast::Expr::Name(target_name) = target else {
        return None;
    };
    let ast::Expr::Call(call) = assign.value.as_ref() else {
        return None;
    };
    let callee = dotted_name(&call.func)?;
    let resolved = resolve_alias_path(&callee, aliases);
    if resolved != "TypeVar" && resolved != "typing.TypeVar" {
        return None;
    }
    let first = call.args.first()?;
    let ast::Expr::Constant(c) = first else {
        return None;
    };
    let ast::Constant::Str(declared) = &c.value else {
        return None;
    };
    let bound = call
        .keywords
        .iter()
        .find(|kw| kw.arg.as_ref().is_some_and(|a| a.as_str() == "bound"))
        .map(|kw| &kw.value);
    Some(TypeVarParts {
        target: target_name.id.as_str(),
        declared: declared.clone(),
        constraints: call.args[1..].iter().collect(),
        bound,
    })
}

// ---------------------------------------------------------------------------
// Pass 2: declarations, classes, variables
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq)]
enum Scope {
    Module,
    Class,
    Function,
}

struct Extractor<'a> {
    src: &'a str,
    file_path: &'a str,
    lines: LineIndex,
    ctx: ParseContext,
    ignores: &'a [IgnoreComment],
    declarations: Vec<Declaration>,
    classes: Vec<ClassDecl>,
    typevars: Vec<TypeVarDecl>,
    variables: Vec<VariableDecl>,
}

struct DefParts<'a> {
    name: &'a str,
    args: &'a ast::Arguments,
    body: &'a [ast::Stmt],
    decorator_list: &'a [ast::Expr],
    returns: Option<&'a ast::Expr>,
    start: usize,
}

fn join_qual(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

impl<'a> Extractor<'a> {
    fn location_at(&self, offset: usize) -> SourceLocation {
        let (line, column) = self.lines.line_col(self.src, offset);
        SourceLocation::new(self.file_path, line, column)
    }

    fn slice(&self, expr: &ast::Expr) -> String {
        let range = expr.range();
        collapse_ws(
            self.src
                .get(range.start().to_usize()..range.end().to_usize())
                .unwrap_or(""),
        )
    }

    fn annotation(&self, expr: &ast::Expr) -> Annotation {
        Annotation {
            raw: self.slice(expr),
            expr: convert_expr(expr, self.src, &self.ctx),
        }
    }

    /// Walk one statement block, returning the declarations found directly
    /// in it (class bodies use this to collect their methods). `if`/`try`
    /// blocks are transparent: conditionally defined functions still belong
    /// to the enclosing scope.
    fn walk_block(
        &mut self,
        stmts: &[ast::Stmt],
        prefix: &str,
        scope: Scope,
    ) -> Vec<Declaration> {
        let mut direct = Vec::new();
        for stmt in stmts {
            match stmt {
                ast::Stmt::FunctionDef(f) => {
                    let parts = DefParts {
                        name: f.name.as_str(),
                        args: &f.args,
                        body: &f.body,
                        decorator_list: &f.decorator_list,
                        returns: f.returns.as_deref(),
                        start: f.range.start().to_usize(),
                    };
                    direct.push(self.extract_def(parts, prefix, scope));
                }
                ast::Stmt::AsyncFunctionDef(f) => {
                    let parts = DefParts {
                        name: f.name.as_str(),
                        args: &f.args,
                        body: &f.body,
                        decorator_list: &f.decorator_list,
                        returns: f.returns.as_deref(),
                        start: f.range.start().to_usize(),
                    };
                    direct.push(self.extract_def(parts, prefix, scope));
                }
                ast::Stmt::ClassDef(class) => {
                    let qual = join_qual(prefix, class.name.as_str());
                    let methods = self.walk_block(&class.body, &qual, Scope::Class);
                    let base_names = class
                        .bases
                        .iter()
                        .filter_map(|base| self.base_name(base))
                        .collect();
                    self.classes.push(ClassDecl {
                        qualified_name: qual,
                        base_names,
                        methods,
                        location: self.location_at(class.range.start().to_usize()),
                    });
                }
                ast::Stmt::If(s) => {
                    direct.extend(self.walk_block(&s.body, prefix, scope));
                    direct.extend(self.walk_block(&s.orelse, prefix, scope));
                }
                ast::Stmt::Try(s) => {
                    direct.extend(self.walk_block(&s.body, prefix, scope));
                    for handler in &s.handlers {
                        let ast::ExceptHandler::ExceptHandler(h) = handler;
                        direct.extend(self.walk_block(&h.body, prefix, scope));
                    }
                    direct.extend(self.walk_block(&s.orelse, prefix, scope));
                    direct.extend(self.walk_block(&s.finalbody, prefix, scope));
                }
                ast::Stmt::Assign(assign) if scope != Scope::Function => {
                    if let Some(parts) = recognize_typevar(assign, &self.ctx.aliases) {
                        self.typevars.push(TypeVarDecl {
                            target_name: parts.target.to_string(),
                            declared_name: parts.declared,
                            constraints: parts
                                .constraints
                                .iter()
                                .map(|e| self.slice(e))
                                .collect(),
                            bound: parts.bound.map(|e| self.slice(e)),
                            location: self.location_at(assign.range.start().to_usize()),
                        });
                    }
                }
                ast::Stmt::AnnAssign(ann) if scope != Scope::Function => {
                    if let ast::Expr::Name(name) = ann.target.as_ref() {
                        self.variables.push(VariableDecl {
                            qualified_name: join_qual(prefix, name.id.as_str()),
                            annotation: self.annotation(&ann.annotation),
                            location: self.location_at(ann.range.start().to_usize()),
                        });
                    }
                }
                _ => {}
            }
        }
        direct
    }

    fn base_name(&self, base: &ast::Expr) -> Option<String> {
        let named = match base {
            ast::Expr::Subscript(sub) => dotted_name(&sub.value),
            other => dotted_name(other),
        }?;
        Some(resolve_alias_path(&named, &self.ctx.aliases))
    }

    fn extract_def(&mut self, parts: DefParts<'_>, prefix: &str, scope: Scope) -> Declaration {
        let qual = join_qual(prefix, parts.name);
        let decorators: Vec<String> = parts
            .decorator_list
            .iter()
            .filter_map(|d| match d {
                ast::Expr::Call(call) => dotted_name(&call.func),
                other => dotted_name(other),
            })
            .collect();

        let mut params = Vec::new();
        let mut sig_end = parts.start;
        {
            let mut push = |arg: &ast::Arg, kind: ParamKind, range_end: usize| {
                let annotation = arg.annotation.as_deref().map(|a| self.annotation(a));
                params.push(Parameter::new(arg.arg.as_str(), kind, annotation));
                sig_end = sig_end.max(range_end);
            };
            let arg_end = |a: &ast::ArgWithDefault| {
                let mut end = a.def.range.end().to_usize();
                if let Some(default) = &a.default {
                    end = end.max(default.range().end().to_usize());
                }
                end
            };
            for a in &parts.args.posonlyargs {
                push(&a.def, ParamKind::Positional, arg_end(a));
            }
            for a in &parts.args.args {
                push(&a.def, ParamKind::Positional, arg_end(a));
            }
            if let Some(v) = &parts.args.vararg {
                push(v, ParamKind::VarPositional, v.range.end().to_usize());
            }
            for a in &parts.args.kwonlyargs {
                push(&a.def, ParamKind::KeywordOnly, arg_end(a));
            }
            if let Some(k) = &parts.args.kwarg {
                push(k, ParamKind::VarKeyword, k.range.end().to_usize());
            }
        }
        if let Some(ret) = parts.returns {
            sig_end = sig_end.max(ret.range().end().to_usize());
        }

        let return_annotation = parts.returns.map(|r| self.annotation(r));
        let is_method = scope == Scope::Class;
        let param_names: BTreeSet<String> = params.iter().map(|p| p.name.clone()).collect();
        let first_param = params.first().map(|p| p.name.clone());
        let body_facts = analyze_body(parts.body, &param_names, first_param.as_deref());

        let def_line = self.lines.line_of(self.src, parts.start);
        let sig_end_line = self.lines.line_of(self.src, sig_end);
        let trailing_ignore = self
            .ignores
            .iter()
            .find(|i| i.location.line >= def_line && i.location.line <= sig_end_line)
            .cloned();

        let decl = Declaration {
            qualified_name: qual.clone(),
            params,
            return_annotation,
            is_method,
            decorators,
            body_facts,
            location: self.location_at(parts.start),
            trailing_ignore,
        };
        self.declarations.push(decl.clone());

        // Nested defs and classes live under `qual.<locals>`.
        let child_prefix = format!("{qual}.<locals>");
        self.walk_block(parts.body, &child_prefix, Scope::Function);
        decl
    }
}

// ---------------------------------------------------------------------------
// Body facts
// ---------------------------------------------------------------------------

fn analyze_body(
    body: &[ast::Stmt],
    param_names: &BTreeSet<String>,
    first_param: Option<&str>,
) -> BodyFacts {
    let mut collector = UseCollector {
        params: param_names,
        first_param,
        facts: BodyFacts::default(),
        masks: Vec::new(),
        depth: 0,
    };
    collector.walk_stmts(body);
    let mut facts = collector.facts;
    facts.all_paths_raise =
        facts.total_return_statements == 0 && !facts.has_yield && terminates_in_raise(body);
    facts
}

/// Structural "every path raises": a statement list terminates if some
/// statement is a `raise`, or an `if` with an `else` whose branches both
/// terminate. Loops, `try`, `with`, and `match` are conservatively
/// non-terminating — false negatives are preferred over false positives.
fn terminates_in_raise(stmts: &[ast::Stmt]) -> bool {
    stmts.iter().any(|stmt| match stmt {
        ast::Stmt::Raise(_) => true,
        ast::Stmt::If(s) => {
            !s.orelse.is_empty() && terminates_in_raise(&s.body) && terminates_in_raise(&s.orelse)
        }
        _ => false,
    })
}

struct UseCollector<'a> {
    params: &'a BTreeSet<String>,
    first_param: Option<&'a str>,
    facts: BodyFacts,
    /// Name sets shadowed by nested defs, lambdas, and comprehensions.
    masks: Vec<BTreeSet<String>>,
    /// 0 inside the declaration's own body; >0 inside nested functions.
    depth: u32,
}

fn name_of(expr: &ast::Expr) -> Option<&str> {
    match expr {
        ast::Expr::Name(n) => Some(n.id.as_str()),
        _ => None,
    }
}

fn string_const(expr: &ast::Expr) -> Option<&str> {
    match expr {
        ast::Expr::Constant(c) => match &c.value {
            ast::Constant::Str(s) => Some(s.as_str()),
            _ => None,
        },
        _ => None,
    }
}

impl<'a> UseCollector<'a> {
    fn is_param(&self, name: &str) -> bool {
        self.params.contains(name) && !self.masks.iter().any(|m| m.contains(name))
    }

    fn record(&mut self, name: &str, use_kind: UseKind) {
        if self.is_param(name) {
            self.facts
                .param_uses
                .entry(name.to_string())
                .or_default()
                .push(use_kind);
        }
    }

    fn walk_stmts(&mut self, stmts: &[ast::Stmt]) {
        for stmt in stmts {
            self.walk_stmt(stmt);
        }
    }

    fn walk_stmt(&mut self, stmt: &ast::Stmt) {
        match stmt {
            ast::Stmt::Return(r) => {
                if let Some(value) = &r.value {
                    match name_of(value) {
                        Some(name) => self.record(name, UseKind::ReturnedDirectly),
                        None => self.walk_expr(value),
                    }
                }
                if self.depth == 0 {
                    self.facts.total_return_statements += 1;
                    if let (Some(value), Some(first)) = (&r.value, self.first_param) {
                        if name_of(value) == Some(first) {
                            self.facts.returns_of_first_param += 1;
                        }
                    }
                }
            }
            ast::Stmt::Expr(e) => self.walk_expr(&e.value),
            ast::Stmt::Assign(a) => {
                for target in &a.targets {
                    self.walk_target(target);
                }
                self.walk_expr(&a.value);
            }
            ast::Stmt::AugAssign(a) => {
                match a.target.as_ref() {
                    ast::Expr::Name(n) => self.record(n.id.as_str(), UseKind::Other),
                    other => self.walk_target(other),
                }
                self.walk_expr(&a.value);
            }
            ast::Stmt::AnnAssign(a) => {
                self.walk_target(&a.target);
                if let Some(value) = &a.value {
                    self.walk_expr(value);
                }
            }
            ast::Stmt::Delete(d) => {
                for target in &d.targets {
                    match target {
                        ast::Expr::Name(n) => self.record(n.id.as_str(), UseKind::Other),
                        other => self.walk_target(other),
                    }
                }
            }
            ast::Stmt::If(s) => {
                self.truth_test(&s.test);
                self.walk_stmts(&s.body);
                self.walk_stmts(&s.orelse);
            }
            ast::Stmt::While(s) => {
                self.truth_test(&s.test);
                self.walk_stmts(&s.body);
                self.walk_stmts(&s.orelse);
            }
            ast::Stmt::For(s) => {
                match name_of(&s.iter) {
                    Some(name) => self.record(name, UseKind::Iterated),
                    None => self.walk_expr(&s.iter),
                }
                self.walk_stmts(&s.body);
                self.walk_stmts(&s.orelse);
            }
            ast::Stmt::AsyncFor(s) => {
                match name_of(&s.iter) {
                    Some(name) => self.record(name, UseKind::Iterated),
                    None => self.walk_expr(&s.iter),
                }
                self.walk_stmts(&s.body);
                self.walk_stmts(&s.orelse);
            }
            ast::Stmt::With(s) => {
                for item in &s.items {
                    self.walk_expr(&item.context_expr);
                }
                self.walk_stmts(&s.body);
            }
            ast::Stmt::AsyncWith(s) => {
                for item in &s.items {
                    self.walk_expr(&item.context_expr);
                }
                self.walk_stmts(&s.body);
            }
            ast::Stmt::Raise(r) => {
                if let Some(exc) = &r.exc {
                    self.walk_expr(exc);
                }
                if let Some(cause) = &r.cause {
                    self.walk_expr(cause);
                }
            }
            ast::Stmt::Try(s) => {
                self.walk_stmts(&s.body);
                for handler in &s.handlers {
                    let ast::ExceptHandler::ExceptHandler(h) = handler;
                    if let Some(t) = &h.type_ {
                        self.walk_expr(t);
                    }
                    self.walk_stmts(&h.body);
                }
                self.walk_stmts(&s.orelse);
                self.walk_stmts(&s.finalbody);
            }
            ast::Stmt::TryStar(s) => {
                self.walk_stmts(&s.body);
                for handler in &s.handlers {
                    let ast::ExceptHandler::ExceptHandler(h) = handler;
                    if let Some(t) = &h.type_ {
                        self.walk_expr(t);
                    }
                    self.walk_stmts(&h.body);
                }
                self.walk_stmts(&s.orelse);
                self.walk_stmts(&s.finalbody);
            }
            ast::Stmt::Assert(s) => {
                self.truth_test(&s.test);
                if let Some(msg) = &s.msg {
                    self.walk_expr(msg);
                }
            }
            ast::Stmt::FunctionDef(f) => self.walk_nested_def(&f.args, &f.body, &f.decorator_list),
            ast::Stmt::AsyncFunctionDef(f) => {
                self.walk_nested_def(&f.args, &f.body, &f.decorator_list)
            }
            ast::Stmt::ClassDef(c) => {
                for base in &c.bases {
                    self.walk_expr(base);
                }
                for kw in &c.keywords {
                    self.walk_expr(&kw.value);
                }
                // A local class body cannot `return` for the enclosing
                // function; treat it like nested code for the counters.
                self.depth += 1;
                self.walk_stmts(&c.body);
                self.depth -= 1;
            }
            ast::Stmt::Match(m) => {
                self.walk_expr(&m.subject);
                for case in &m.cases {
                    if let Some(guard) = &case.guard {
                        self.truth_test(guard);
                    }
                    self.walk_stmts(&case.body);
                }
            }
            _ => {}
        }
    }

    /// Nested function: defaults evaluate in the enclosing scope; the body
    /// is walked for closure uses with the inner parameters masked, and
    /// without contributing to return/yield counters.
    fn walk_nested_def(
        &mut self,
        args: &ast::Arguments,
        body: &[ast::Stmt],
        decorators: &[ast::Expr],
    ) {
        for d in decorators {
            self.walk_expr(d);
        }
        let mut mask = BTreeSet::new();
        let mut visit = |arg: &ast::Arg| {
            mask.insert(arg.arg.to_string());
        };
        for a in &args.posonlyargs {
            if let Some(default) = &a.default {
                self.walk_expr(default);
            }
            visit(&a.def);
        }
        for a in &args.args {
            if let Some(default) = &a.default {
                self.walk_expr(default);
            }
            visit(&a.def);
        }
        if let Some(v) = &args.vararg {
            visit(v);
        }
        for a in &args.kwonlyargs {
            if let Some(default) = &a.default {
                self.walk_expr(default);
            }
            visit(&a.def);
        }
        if let Some(k) = &args.kwarg {
            visit(k);
        }
        self.masks.push(mask);
        self.depth += 1;
        self.walk_stmts(body);
        self.depth -= 1;
        self.masks.pop();
    }

    /// Assignment-target positions: attribute and subscript stores on a
    /// parameter are uses; rebinding the bare name is not.
    fn walk_target(&mut self, target: &ast::Expr) {
        match target {
            ast::Expr::Name(_) => {}
            ast::Expr::Attribute(a) => match name_of(&a.value) {
                Some(name) => {
                    self.record(name, UseKind::AttributeSet(a.attr.to_string()));
                }
                None => self.walk_expr(&a.value),
            },
            ast::Expr::Subscript(s) => match name_of(&s.value) {
                Some(name) => self.subscript_use(name, &s.slice),
                None => {
                    self.walk_expr(&s.value);
                    self.walk_expr(&s.slice);
                }
            },
            ast::Expr::Tuple(t) => {
                for elt in &t.elts {
                    self.walk_target(elt);
                }
            }
            ast::Expr::List(l) => {
                for elt in &l.elts {
                    self.walk_target(elt);
                }
            }
            ast::Expr::Starred(s) => self.walk_target(&s.value),
            other => self.walk_expr(other),
        }
    }

    fn subscript_use(&mut self, name: &str, slice: &ast::Expr) {
        match string_const(slice) {
            Some(key) => {
                self.record(name, UseKind::SubscriptedWithStringLiteral(key.to_string()));
            }
            None => {
                self.record(name, UseKind::SubscriptedOther);
                self.walk_expr(slice);
            }
        }
    }

    fn truth_test(&mut self, expr: &ast::Expr) {
        match name_of(expr) {
            Some(name) => self.record(name, UseKind::TruthTested),
            None => self.walk_expr(expr),
        }
    }

    fn walk_expr(&mut self, expr: &ast::Expr) {
        match expr {
            ast::Expr::Name(n) => self.record(n.id.as_str(), UseKind::Other),
            ast::Expr::Constant(_) => {}
            ast::Expr::Call(call) => self.walk_call(call),
            ast::Expr::Compare(cmp) => self.walk_compare(cmp),
            ast::Expr::BinOp(b) => {
                match (name_of(&b.left), name_of(&b.right)) {
                    (Some(l), Some(r)) if self.is_param(l) && self.is_param(r) => {
                        self.record(l, UseKind::BinaryOpWith(r.to_string()));
                        self.record(r, UseKind::BinaryOpWith(l.to_string()));
                    }
                    _ => {
                        match name_of(&b.left) {
                            Some(l) => self.record(l, UseKind::Other),
                            None => self.walk_expr(&b.left),
                        }
                        match name_of(&b.right) {
                            Some(r) => self.record(r, UseKind::Other),
                            None => self.walk_expr(&b.right),
                        }
                    }
                }
            }
            ast::Expr::BoolOp(b) => {
                for value in &b.values {
                    self.truth_test(value);
                }
            }
            ast::Expr::UnaryOp(u) => match (&u.op, name_of(&u.operand)) {
                (ast::UnaryOp::Not, Some(name)) => self.record(name, UseKind::TruthTested),
                (_, Some(name)) => self.record(name, UseKind::Other),
                _ => self.walk_expr(&u.operand),
            },
            ast::Expr::Attribute(a) => match name_of(&a.value) {
                Some(name) => self.record(name, UseKind::Other),
                None => self.walk_expr(&a.value),
            },
            ast::Expr::Subscript(s) => match name_of(&s.value) {
                Some(name) => self.subscript_use(name, &s.slice),
                None => {
                    self.walk_expr(&s.value);
                    self.walk_expr(&s.slice);
                }
            },
            ast::Expr::Slice(s) => {
                for part in [&s.lower, &s.upper, &s.step].into_iter().flatten() {
                    self.walk_expr(part);
                }
            }
            ast::Expr::Starred(s) => self.walk_expr(&s.value),
            ast::Expr::Lambda(l) => {
                let mut mask = BTreeSet::new();
                for a in l
                    .args
                    .posonlyargs
                    .iter()
                    .chain(&l.args.args)
                    .chain(&l.args.kwonlyargs)
                {
                    if let Some(default) = &a.default {
                        self.walk_expr(default);
                    }
                    mask.insert(a.def.arg.to_string());
                }
                if let Some(v) = &l.args.vararg {
                    mask.insert(v.arg.to_string());
                }
                if let Some(k) = &l.args.kwarg {
                    mask.insert(k.arg.to_string());
                }
                self.masks.push(mask);
                self.walk_expr(&l.body);
                self.masks.pop();
            }
            ast::Expr::IfExp(e) => {
                self.truth_test(&e.test);
                self.walk_expr(&e.body);
                self.walk_expr(&e.orelse);
            }
            ast::Expr::Dict(d) => {
                for key in d.keys.iter().flatten() {
                    self.walk_expr(key);
                }
                for value in &d.values {
                    self.walk_expr(value);
                }
            }
            ast::Expr::Set(s) => {
                for elt in &s.elts {
                    self.walk_expr(elt);
                }
            }
            ast::Expr::List(l) => {
                for elt in &l.elts {
                    self.walk_expr(elt);
                }
            }
            ast::Expr::Tuple(t) => {
                for elt in &t.elts {
                    self.walk_expr(elt);
                }
            }
            ast::Expr::ListComp(c) => self.walk_comprehension(&c.generators, &[&c.elt]),
            ast::Expr::SetComp(c) => self.walk_comprehension(&c.generators, &[&c.elt]),
            ast::Expr::GeneratorExp(c) => self.walk_comprehension(&c.generators, &[&c.elt]),
            ast::Expr::DictComp(c) => self.walk_comprehension(&c.generators, &[&c.key, &c.value]),
            ast::Expr::Await(a) => match name_of(&a.value) {
                Some(name) => self.record(name, UseKind::Other),
                None => self.walk_expr(&a.value),
            },
            ast::Expr::Yield(y) => {
                if self.depth == 0 {
                    self.facts.has_yield = true;
                }
                if let Some(value) = &y.value {
                    self.walk_expr(value);
                }
            }
            ast::Expr::YieldFrom(y) => {
                if self.depth == 0 {
                    self.facts.has_yield = true;
                }
                match name_of(&y.value) {
                    Some(name) => self.record(name, UseKind::Iterated),
                    None => self.walk_expr(&y.value),
                }
            }
            ast::Expr::NamedExpr(n) => self.walk_expr(&n.value),
            ast::Expr::JoinedStr(j) => {
                for value in &j.values {
                    self.walk_expr(value);
                }
            }
            ast::Expr::FormattedValue(v) => {
                self.walk_expr(&v.value);
                if let Some(spec) = &v.format_spec {
                    self.walk_expr(spec);
                }
            }
        }
    }

    fn walk_call(&mut self, call: &ast::ExprCall) {
        // len(p) is the length-taken use.
        if name_of(&call.func) == Some("len") && call.args.len() == 1 {
            if let Some(name) = name_of(&call.args[0]) {
                if self.is_param(name) {
                    self.record(name, UseKind::LengthTaken);
                    return;
                }
            }
        }
        match call.func.as_ref() {
            ast::Expr::Name(n) => {
                let name = n.id.as_str();
                if self.is_param(name) {
                    let has_star_args = call
                        .args
                        .iter()
                        .any(|a| matches!(a, ast::Expr::Starred(_)));
                    let has_double_star_kwargs =
                        call.keywords.iter().any(|kw| kw.arg.is_none());
                    let leading_positional_count = call
                        .args
                        .iter()
                        .take_while(|a| !matches!(a, ast::Expr::Starred(_)))
                        .count() as u32;
                    self.facts
                        .param_call_sites
                        .entry(name.to_string())
                        .or_default()
                        .push(CallShape {
                            has_star_args,
                            has_double_star_kwargs,
                            leading_positional_count,
                        });
                    self.record(name, UseKind::Other);
                }
            }
            ast::Expr::Attribute(a) => match name_of(&a.value) {
                Some(name) => self.record(name, UseKind::MethodCalled(a.attr.to_string())),
                None => self.walk_expr(&a.value),
            },
            other => self.walk_expr(other),
        }
        for arg in &call.args {
            match arg {
                ast::Expr::Starred(s) => match name_of(&s.value) {
                    Some(name) => self.record(name, UseKind::PassedAlong),
                    None => self.walk_expr(&s.value),
                },
                other => match name_of(other) {
                    Some(name) => self.record(name, UseKind::PassedAlong),
                    None => self.walk_expr(other),
                },
            }
        }
        for kw in &call.keywords {
            match name_of(&kw.value) {
                Some(name) => self.record(name, UseKind::PassedAlong),
                None => self.walk_expr(&kw.value),
            }
        }
    }

    fn walk_compare(&mut self, cmp: &ast::ExprCompare) {
        let mut operands: Vec<&ast::Expr> = vec![&cmp.left];
        operands.extend(cmp.comparators.iter());
        for (i, op) in cmp.ops.iter().enumerate() {
            let (left, right) = (operands[i], operands[i + 1]);
            let is_membership = matches!(op, ast::CmpOp::In | ast::CmpOp::NotIn);
            if is_membership {
                if let Some(container) = name_of(right) {
                    match string_const(left) {
                        Some(key) => self.record(
                            container,
                            UseKind::MembershipTestedWithStringLiteral(key.to_string()),
                        ),
                        None => self.record(container, UseKind::Other),
                    }
                }
                if let Some(name) = name_of(left) {
                    self.record(name, UseKind::Other);
                }
            } else {
                match (name_of(left), name_of(right)) {
                    (Some(l), Some(r)) if self.is_param(l) && self.is_param(r) => {
                        self.record(l, UseKind::BinaryOpWith(r.to_string()));
                        self.record(r, UseKind::BinaryOpWith(l.to_string()));
                    }
                    (l, r) => {
                        if let Some(l) = l {
                            self.record(l, UseKind::Other);
                        }
                        if let Some(r) = r {
                            self.record(r, UseKind::Other);
                        }
                    }
                }
            }
        }
        for operand in operands {
            if name_of(operand).is_none() && string_const(operand).is_none() {
                self.walk_expr(operand);
            }
        }
    }

    fn walk_comprehension(&mut self, generators: &[ast::Comprehension], outputs: &[&ast::Expr]) {
        self.masks.push(BTreeSet::new());
        for gen in generators {
            // The iterated expression still sees the outer bindings
            // accumulated so far; its own targets mask from here on.
            match name_of(&gen.iter) {
                Some(name) => self.record(name, UseKind::Iterated),
                None => self.walk_expr(&gen.iter),
            }
            let mut names = Vec::new();
            collect_binding_names(&gen.target, &mut names);
            if let Some(mask) = self.masks.last_mut() {
                mask.extend(names);
            }
            for cond in &gen.ifs {
                self.truth_test(cond);
            }
        }
        for output in outputs {
            self.walk_expr(output);
        }
        self.masks.pop();
    }
}

fn collect_binding_names(target: &ast::Expr, out: &mut Vec<String>) {
    match target {
        ast::Expr::Name(n) => out.push(n.id.to_string()),
        ast::Expr::Tuple(t) => {
            for elt in &t.elts {
                collect_binding_names(elt, out);
            }
        }
        ast::Expr::List(l) => {
            for elt in &l.elts {
                collect_binding_names(elt, out);
            }
        }
        ast::Expr::Starred(s) => collect_binding_names(&s.value, out),
        _ => {}
    }
}
