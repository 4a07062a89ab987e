//! Parsing, normalization, and rendering of PEP 484 type expressions.
//!
//! Annotations are parsed into a small tree ([`TypeExpr`]) on which `Any`
//! occurrences can be counted and classified. Parsing never fails: anything
//! outside the supported grammar collapses into an [`TypeNode::Opaque`] leaf
//! that renders back verbatim.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rustpython_parser::{ast, Parse};

/// Name-resolution context for annotation parsing: import aliases collected
/// from the file plus the names bound by `X = TypeVar('X')` in scope.
#[derive(Debug, Clone, Default)]
pub struct ParseContext {
    /// Local name to canonical dotted path, e.g. `t` → `typing`,
    /// `A` → `typing.Any`. `typing_extensions` is canonicalized to `typing`.
    pub aliases: BTreeMap<String, String>,
    /// Names bound by `TypeVar(...)` assignments in the file.
    pub typevars: BTreeSet<String>,
}

/// A parsed type annotation.
///
/// `was_bare` records that the source spelled a known generic without type
/// arguments (`Callable`, `Dict`, ...) before normalization filled the
/// arguments in. The flag is carried for the wrapper-function analysis but
/// deliberately ignored by equality and hashing, so that deduplication and
/// union flattening treat `Callable` and `Callable[..., Any]` as one type.
#[derive(Debug, Clone, Eq)]
pub struct TypeExpr {
    pub node: TypeNode,
    pub was_bare: bool,
}

/// The shape of a type expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeNode {
    /// The dynamic type `Any`.
    Any,
    /// `None` used as a type (the unit type `NoneType`).
    NoneType,
    /// A plain (possibly dotted) name: `int`, `foo.Bar`. Well-known typing
    /// members are stored under their short canonical name (`Dict`, `Text`).
    Named(String),
    /// A subscripted generic: `Dict[str, int]`, `List[T]`.
    Generic { head: String, args: Vec<TypeExpr> },
    /// `Callable[[a, b], r]` or `Callable[..., r]`.
    Callable {
        params: CallableParams,
        ret: Box<TypeExpr>,
    },
    /// A flattened union with at least two members, `NoneType` last.
    Union(Vec<TypeExpr>),
    /// A reference to a type variable in scope (also `AnyStr`).
    TypeVarRef(String),
    /// The `Self` type.
    SelfType,
    /// `Never` / `NoReturn` (rendered as `NoReturn`).
    Never,
    /// A string forward reference, e.g. `'Traffic'`.
    Forward(Box<TypeExpr>),
    /// The `...` placeholder inside `Tuple[int, ...]`. Never counts as Any.
    EllipsisMarker,
    /// Source text outside the supported grammar, kept verbatim.
    Opaque(String),
}

/// The parameter part of a `Callable[...]` annotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CallableParams {
    /// `Callable[..., r]` (and the expansion of bare `Callable`).
    Ellipsis,
    /// `Callable[[a, b], r]`.
    List(Vec<TypeExpr>),
}

impl PartialEq for TypeExpr {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

impl std::hash::Hash for TypeExpr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.node.hash(state);
    }
}

impl TypeExpr {
    pub fn new(node: TypeNode) -> Self {
        Self {
            node,
            was_bare: false,
        }
    }

    fn bare(node: TypeNode) -> Self {
        Self {
            node,
            was_bare: true,
        }
    }

    /// The `Any` leaf, as materialized for missing annotations.
    pub fn any() -> Self {
        Self::new(TypeNode::Any)
    }

    pub fn is_any(&self) -> bool {
        matches!(self.node, TypeNode::Any)
    }

    /// True for a `Callable` whose source spelled no type arguments
    /// (the "plain Callable" of the wrapper-function analysis).
    pub fn is_bare_callable(&self) -> bool {
        self.was_bare && matches!(self.node, TypeNode::Callable { .. })
    }
}

/// Typing members that expand to a known arity of `Any` arguments when
/// written bare. `Callable` is handled separately (it expands at parse time).
const BARE_EXPANSIONS: &[(&str, usize)] = &[
    ("Dict", 2),
    ("Mapping", 2),
    ("List", 1),
    ("Set", 1),
    ("FrozenSet", 1),
    ("Iterable", 1),
    ("Sequence", 1),
];

/// Names treated as members of `typing` even when a file references them
/// without importing them (common in documentation excerpts and stubs).
const TYPING_MEMBERS: &[&str] = &[
    "AbstractSet",
    "Annotated",
    "Any",
    "AnyStr",
    "AsyncGenerator",
    "AsyncIterable",
    "AsyncIterator",
    "Awaitable",
    "ByteString",
    "Callable",
    "ClassVar",
    "Collection",
    "Container",
    "Coroutine",
    "Counter",
    "DefaultDict",
    "Deque",
    "Dict",
    "Final",
    "FrozenSet",
    "Generator",
    "Hashable",
    "Iterable",
    "Iterator",
    "List",
    "Literal",
    "Mapping",
    "MutableMapping",
    "MutableSequence",
    "MutableSet",
    "Never",
    "NoReturn",
    "Optional",
    "OrderedDict",
    "Protocol",
    "Reversible",
    "Self",
    "Sequence",
    "Set",
    "Sized",
    "Text",
    "Tuple",
    "Type",
    "TypedDict",
    "Union",
];

/// Builtins that PEP 585 allows as generics; lowered to their typing names.
const PEP585_BUILTINS: &[(&str, &str)] = &[
    ("dict", "Dict"),
    ("list", "List"),
    ("set", "Set"),
    ("frozenset", "FrozenSet"),
    ("tuple", "Tuple"),
    ("type", "Type"),
];

/// `collections.abc` members lowered to their typing spellings.
const COLLECTIONS_ABC: &[(&str, &str)] = &[
    ("AsyncGenerator", "AsyncGenerator"),
    ("AsyncIterable", "AsyncIterable"),
    ("AsyncIterator", "AsyncIterator"),
    ("Awaitable", "Awaitable"),
    ("Callable", "Callable"),
    ("Collection", "Collection"),
    ("Container", "Container"),
    ("Coroutine", "Coroutine"),
    ("Generator", "Generator"),
    ("Hashable", "Hashable"),
    ("Iterable", "Iterable"),
    ("Iterator", "Iterator"),
    ("Mapping", "Mapping"),
    ("MutableMapping", "MutableMapping"),
    ("MutableSequence", "MutableSequence"),
    ("MutableSet", "MutableSet"),
    ("Reversible", "Reversible"),
    ("Sequence", "Sequence"),
    ("Set", "AbstractSet"),
    ("Sized", "Sized"),
];

fn lookup(table: &'static [(&'static str, &'static str)], key: &str) -> Option<&'static str> {
    table.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

fn bare_arity(head: &str) -> Option<usize> {
    BARE_EXPANSIONS
        .iter()
        .find(|(k, _)| *k == head)
        .map(|(_, n)| *n)
}

/// Parse an annotation's source text into a [`TypeExpr`]. Never fails;
/// anything outside the supported grammar becomes [`TypeNode::Opaque`].
pub fn parse_type_expr(raw: &str, ctx: &ParseContext) -> TypeExpr {
    let trimmed = raw.trim();
    match ast::Expr::parse(trimmed, "<annotation>") {
        Ok(expr) => convert_expr(&expr, trimmed, ctx),
        Err(_) => TypeExpr::new(TypeNode::Opaque(trimmed.to_string())),
    }
}

/// Convert an already-parsed expression. `src` must be the text the
/// expression's ranges index into (the file source, or the annotation text).
pub(crate) fn convert_expr(expr: &ast::Expr, src: &str, ctx: &ParseContext) -> TypeExpr {
    use rustpython_parser::ast::Ranged;
    let opaque = |e: &ast::Expr| {
        let range = e.range();
        let text = src
            .get(range.start().to_usize()..range.end().to_usize())
            .unwrap_or("")
            .trim();
        TypeExpr::new(TypeNode::Opaque(collapse_ws(text)))
    };

    match expr {
        ast::Expr::Name(_) | ast::Expr::Attribute(_) => match dotted_name(expr) {
            Some(path) => resolve_name(&path, ctx),
            None => opaque(expr),
        },
        ast::Expr::Constant(c) => match &c.value {
            ast::Constant::None => TypeExpr::new(TypeNode::NoneType),
            ast::Constant::Ellipsis => TypeExpr::new(TypeNode::EllipsisMarker),
            ast::Constant::Str(s) => {
                // A string annotation is a forward reference; parse its
                // contents as a type expression of its own.
                let inner = parse_forward(s, ctx);
                TypeExpr::new(TypeNode::Forward(Box::new(inner)))
            }
            _ => opaque(expr),
        },
        ast::Expr::BinOp(b) if matches!(b.op, ast::Operator::BitOr) => {
            // PEP 604 sugar: `a | b` is a union.
            let left = convert_expr(&b.left, src, ctx);
            let right = convert_expr(&b.right, src, ctx);
            union_of(vec![left, right])
        }
        ast::Expr::Subscript(sub) => {
            let Some(head_path) = dotted_name(&sub.value) else {
                return opaque(expr);
            };
            let head = match resolve_name(&head_path, ctx).node {
                TypeNode::Named(name) => name,
                // `Callable` resolves to a bare-callable node; recover the head.
                TypeNode::Callable { .. } => "Callable".to_string(),
                _ => return opaque(expr),
            };
            let args: Vec<&ast::Expr> = match sub.slice.as_ref() {
                ast::Expr::Tuple(t) => t.elts.iter().collect(),
                other => vec![other],
            };
            convert_subscript(&head, &args, expr, src, ctx, opaque)
        }
        _ => opaque(expr),
    }
}

fn convert_subscript(
    head: &str,
    args: &[&ast::Expr],
    whole: &ast::Expr,
    src: &str,
    ctx: &ParseContext,
    opaque: impl Fn(&ast::Expr) -> TypeExpr,
) -> TypeExpr {
    match head {
        "Callable" => {
            // Callable[[a, b], r] | Callable[..., r]; anything else (ParamSpec,
            // Concatenate) stays a plain generic so it renders back faithfully.
            if args.len() == 2 {
                let ret = convert_expr(args[1], src, ctx);
                match args[0] {
                    ast::Expr::List(list) => {
                        let params = list
                            .elts
                            .iter()
                            .map(|e| convert_expr(e, src, ctx))
                            .collect();
                        return TypeExpr::new(TypeNode::Callable {
                            params: CallableParams::List(params),
                            ret: Box::new(ret),
                        });
                    }
                    ast::Expr::Constant(c) if matches!(c.value, ast::Constant::Ellipsis) => {
                        return TypeExpr::new(TypeNode::Callable {
                            params: CallableParams::Ellipsis,
                            ret: Box::new(ret),
                        });
                    }
                    _ => {}
                }
            }
            generic(head, args, src, ctx)
        }
        "Union" => union_of(args.iter().map(|e| convert_expr(e, src, ctx)).collect()),
        "Annotated" => {
            // Annotated[T, ...] is T plus metadata; keep only the type.
            match args.first() {
                Some(first) => convert_expr(first, src, ctx),
                None => opaque(whole),
            }
        }
        "Literal" => opaque(whole),
        _ => generic(head, args, src, ctx),
    }
}

fn generic(head: &str, args: &[&ast::Expr], src: &str, ctx: &ParseContext) -> TypeExpr {
    let args: Vec<TypeExpr> = args.iter().map(|e| convert_expr(e, src, ctx)).collect();
    TypeExpr::new(TypeNode::Generic {
        head: head.to_string(),
        args,
    })
}

/// Parse the contents of a string annotation. Unparseable contents are kept
/// verbatim so the forward reference still renders.
fn parse_forward(inner: &str, ctx: &ParseContext) -> TypeExpr {
    let trimmed = inner.trim();
    match ast::Expr::parse(trimmed, "<forward>") {
        Ok(expr) => convert_expr(&expr, trimmed, ctx),
        Err(_) => TypeExpr::new(TypeNode::Opaque(trimmed.to_string())),
    }
}

/// Extract a dotted name (`a.b.c`) from a Name/Attribute chain.
pub(crate) fn dotted_name(expr: &ast::Expr) -> Option<String> {
    match expr {
        ast::Expr::Name(n) => Some(n.id.to_string()),
        ast::Expr::Attribute(a) => {
            let base = dotted_name(&a.value)?;
            Some(format!("{base}.{}", a.attr))
        }
        _ => None,
    }
}

/// Resolve a dotted name against the import aliases and TypeVar scope,
/// producing the canonical node.
fn resolve_name(path: &str, ctx: &ParseContext) -> TypeExpr {
    let (head, rest) = match path.split_once('.') {
        Some((h, r)) => (h, Some(r)),
        None => (path, None),
    };
    let canonical = match ctx.aliases.get(head) {
        Some(target) => match rest {
            Some(r) => format!("{target}.{r}"),
            None => target.clone(),
        },
        None => path.to_string(),
    };

    if let Some(member) = canonical
        .strip_prefix("typing.")
        .or_else(|| canonical.strip_prefix("typing_extensions."))
    {
        return typing_member(member);
    }
    if let Some(member) = canonical.strip_prefix("collections.abc.") {
        if let Some(short) = lookup(COLLECTIONS_ABC, member) {
            return typing_member(short);
        }
        return TypeExpr::new(TypeNode::Named(canonical));
    }
    if canonical == "types.NoneType" || canonical == "NoneType" {
        return TypeExpr::new(TypeNode::NoneType);
    }
    if !canonical.contains('.') {
        // TypeVars declared in the file shadow everything else.
        if ctx.typevars.contains(canonical.as_str()) {
            return TypeExpr::new(TypeNode::TypeVarRef(canonical));
        }
        if let Some(lowered) = lookup(PEP585_BUILTINS, &canonical) {
            return TypeExpr::bare(TypeNode::Named(lowered.to_string()));
        }
        if TYPING_MEMBERS.contains(&canonical.as_str()) {
            return typing_member(&canonical);
        }
    }
    TypeExpr::new(TypeNode::Named(canonical))
}

/// The canonical node for a member of `typing`.
fn typing_member(member: &str) -> TypeExpr {
    match member {
        "Any" => TypeExpr::new(TypeNode::Any),
        "Self" => TypeExpr::new(TypeNode::SelfType),
        "Never" | "NoReturn" => TypeExpr::new(TypeNode::Never),
        // AnyStr is a constrained TypeVar, never the dynamic type.
        "AnyStr" => TypeExpr::new(TypeNode::TypeVarRef("AnyStr".to_string())),
        "Callable" => TypeExpr::bare(TypeNode::Callable {
            params: CallableParams::Ellipsis,
            ret: Box::new(TypeExpr::any()),
        }),
        name if bare_arity(name).is_some() || name == "Tuple" => {
            TypeExpr::bare(TypeNode::Named(name.to_string()))
        }
        name => TypeExpr::new(TypeNode::Named(name.to_string())),
    }
}

/// Build a union: flatten nested unions, deduplicate, sort members by their
/// rendering with `NoneType` last. A single surviving member is returned
/// unwrapped so `Union[int]`-ish inputs stay lawful.
pub(crate) fn union_of(members: Vec<TypeExpr>) -> TypeExpr {
    let mut flat: Vec<TypeExpr> = Vec::new();
    let mut stack: Vec<TypeExpr> = members.into_iter().rev().collect();
    while let Some(m) = stack.pop() {
        match m.node {
            TypeNode::Union(inner) => {
                for item in inner.into_iter().rev() {
                    stack.push(item);
                }
            }
            _ => {
                if !flat.contains(&m) {
                    flat.push(m);
                }
            }
        }
    }
    flat.sort_by_cached_key(|m| (matches!(m.node, TypeNode::NoneType), render(m)));
    match flat.len() {
        0 => TypeExpr::new(TypeNode::Opaque(String::new())),
        1 => flat.into_iter().next().unwrap(),
        _ => TypeExpr::new(TypeNode::Union(flat)),
    }
}

/// Rewrite a type expression into its canonical form: `Optional` becomes an
/// explicit union, bare generics receive their `Any` arguments, `Text`
/// becomes `str`, `NoReturn` becomes the Never node, unions re-flatten.
/// Idempotent.
pub fn normalize(t: &TypeExpr) -> TypeExpr {
    let was_bare = t.was_bare;
    let normalized = match &t.node {
        TypeNode::Named(name) => match name.as_str() {
            "Text" => TypeExpr::new(TypeNode::Named("str".to_string())),
            "NoReturn" | "Never" => TypeExpr::new(TypeNode::Never),
            "Tuple" => TypeExpr {
                node: TypeNode::Generic {
                    head: "Tuple".to_string(),
                    args: vec![TypeExpr::any(), TypeExpr::new(TypeNode::EllipsisMarker)],
                },
                was_bare,
            },
            other => match bare_arity(other) {
                Some(n) => TypeExpr {
                    node: TypeNode::Generic {
                        head: other.to_string(),
                        args: vec![TypeExpr::any(); n],
                    },
                    was_bare,
                },
                None => t.clone(),
            },
        },
        TypeNode::Generic { head, args } => {
            let args: Vec<TypeExpr> = args.iter().map(normalize).collect();
            match head.as_str() {
                "Optional" => {
                    let mut members = args;
                    members.push(TypeExpr::new(TypeNode::NoneType));
                    union_of(members)
                }
                "Union" => union_of(args),
                _ => TypeExpr {
                    node: TypeNode::Generic {
                        head: head.clone(),
                        args,
                    },
                    was_bare,
                },
            }
        }
        TypeNode::Callable { params, ret } => {
            let params = match params {
                CallableParams::Ellipsis => CallableParams::Ellipsis,
                CallableParams::List(ps) => {
                    CallableParams::List(ps.iter().map(normalize).collect())
                }
            };
            TypeExpr {
                node: TypeNode::Callable {
                    params,
                    ret: Box::new(normalize(ret)),
                },
                was_bare,
            }
        }
        TypeNode::Union(members) => union_of(members.iter().map(normalize).collect()),
        TypeNode::Forward(inner) => TypeExpr {
            node: TypeNode::Forward(Box::new(normalize(inner))),
            was_bare,
        },
        _ => t.clone(),
    };
    normalized
}

/// Count `Any` nodes. Ellipsis placeholders contribute nothing.
pub fn count_any(t: &TypeExpr) -> usize {
    match &t.node {
        TypeNode::Any => 1,
        TypeNode::Generic { args, .. } => args.iter().map(count_any).sum(),
        TypeNode::Callable { params, ret } => {
            let in_params = match params {
                CallableParams::Ellipsis => 0,
                CallableParams::List(ps) => ps.iter().map(count_any).sum(),
            };
            in_params + count_any(ret)
        }
        TypeNode::Union(members) => members.iter().map(count_any).sum(),
        TypeNode::Forward(inner) => count_any(inner),
        _ => 0,
    }
}

/// Render the canonical text of a type expression.
pub fn render(t: &TypeExpr) -> String {
    t.to_string()
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            TypeNode::Any => f.write_str("Any"),
            TypeNode::NoneType => f.write_str("None"),
            TypeNode::Named(name) => f.write_str(name),
            TypeNode::Generic { head, args } => {
                write!(f, "{head}[")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str("]")
            }
            TypeNode::Callable { params, ret } => {
                f.write_str("Callable[")?;
                match params {
                    CallableParams::Ellipsis => f.write_str("...")?,
                    CallableParams::List(ps) => {
                        f.write_str("[")?;
                        for (i, p) in ps.iter().enumerate() {
                            if i > 0 {
                                f.write_str(", ")?;
                            }
                            write!(f, "{p}")?;
                        }
                        f.write_str("]")?;
                    }
                }
                write!(f, ", {ret}]")
            }
            TypeNode::Union(members) => {
                f.write_str("Union[")?;
                for (i, m) in members.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str("]")
            }
            TypeNode::TypeVarRef(name) => f.write_str(name),
            TypeNode::SelfType => f.write_str("Self"),
            TypeNode::Never => f.write_str("NoReturn"),
            TypeNode::Forward(inner) => write!(f, "'{inner}'"),
            TypeNode::EllipsisMarker => f.write_str("..."),
            TypeNode::Opaque(raw) => f.write_str(raw),
        }
    }
}

pub(crate) fn collapse_ws(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_ws = false;
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !last_ws && !out.is_empty() {
                out.push(' ');
            }
            last_ws = true;
        } else {
            out.push(ch);
            last_ws = false;
        }
    }
    out.trim_end().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> ParseContext {
        ParseContext::default()
    }

    fn parse(raw: &str) -> TypeExpr {
        parse_type_expr(raw, &ctx())
    }

    #[test]
    fn parses_plain_generics() {
        let t = parse("Dict[str, Any]");
        match &t.node {
            TypeNode::Generic { head, args } => {
                assert_eq!(head, "Dict");
                assert_eq!(args.len(), 2);
                assert_eq!(args[0].node, TypeNode::Named("str".to_string()));
                assert_eq!(args[1].node, TypeNode::Any);
            }
            other => panic!("expected generic, got {other:?}"),
        }
    }

    #[test]
    fn applies_import_aliases() {
        let mut c = ctx();
        c.aliases.insert("t".to_string(), "typing".to_string());
        c.aliases.insert("A".to_string(), "typing.Any".to_string());
        assert!(parse_type_expr("t.Any", &c).is_any());
        assert!(parse_type_expr("A", &c).is_any());
    }

    #[test]
    fn resolves_typevars_in_scope() {
        let mut c = ctx();
        c.typevars.insert("Car".to_string());
        let t = parse_type_expr("Union[Car, List['Traffic']]", &c);
        match &t.node {
            TypeNode::Union(members) => {
                assert_eq!(members[0].node, TypeNode::TypeVarRef("Car".to_string()));
                match &members[1].node {
                    TypeNode::Generic { head, args } => {
                        assert_eq!(head, "List");
                        assert!(matches!(args[0].node, TypeNode::Forward(_)));
                    }
                    other => panic!("expected List generic, got {other:?}"),
                }
            }
            other => panic!("expected union, got {other:?}"),
        }
    }

    #[test]
    fn bare_callable_expands_at_parse_time() {
        let t = parse("Callable");
        assert!(t.was_bare);
        match &t.node {
            TypeNode::Callable { params, ret } => {
                assert_eq!(*params, CallableParams::Ellipsis);
                assert!(ret.is_any());
            }
            other => panic!("expected callable, got {other:?}"),
        }
        assert!(!parse("Callable[[int], int]").was_bare);
    }

    #[test]
    fn pipe_union_is_parsed_with_none_last() {
        let t = parse("int | None");
        match &t.node {
            TypeNode::Union(members) => {
                assert_eq!(members[0].node, TypeNode::Named("int".to_string()));
                assert_eq!(members[1].node, TypeNode::NoneType);
            }
            other => panic!("expected union, got {other:?}"),
        }
        // None sorts last regardless of source order.
        assert_eq!(render(&parse("None | int")), "Union[int, None]");
    }

    #[test]
    fn unions_flatten_dedup_and_sort() {
        assert_eq!(
            render(&parse("Union[str, Union[int, str], None]")),
            "Union[int, str, None]"
        );
        assert_eq!(render(&parse("Union[int, int]")), "int");
    }

    #[test]
    fn strings_are_forward_references() {
        let t = parse("'Shape'");
        match &t.node {
            TypeNode::Forward(inner) => {
                assert_eq!(inner.node, TypeNode::Named("Shape".to_string()));
            }
            other => panic!("expected forward ref, got {other:?}"),
        }
        assert_eq!(render(&t), "'Shape'");
        // Unparseable contents survive verbatim inside the quotes.
        let bad = parse("'not a !type'");
        assert!(matches!(
            &bad.node,
            TypeNode::Forward(inner) if matches!(inner.node, TypeNode::Opaque(_))
        ));
    }

    #[test]
    fn unsupported_syntax_collapses_to_opaque() {
        assert!(matches!(parse("lambda: 1").node, TypeNode::Opaque(_)));
        assert!(matches!(parse("1 + (").node, TypeNode::Opaque(_)));
        assert!(matches!(parse("Literal['a', 'b']").node, TypeNode::Opaque(_)));
    }

    #[test]
    fn pep585_builtins_are_lowered() {
        assert_eq!(render(&parse("dict[str, int]")), "Dict[str, int]");
        assert_eq!(render(&parse("list[int]")), "List[int]");
    }

    #[test]
    fn collections_abc_names_are_lowered() {
        assert_eq!(render(&parse("collections.abc.Mapping[str, int]")), "Mapping[str, int]");
        assert_eq!(render(&parse("collections.abc.Set[int]")), "AbstractSet[int]");
    }

    #[test]
    fn annotated_unwraps_to_its_type() {
        assert_eq!(render(&parse("Annotated[int, 'meta']")), "int");
    }

    #[test]
    fn special_members_resolve() {
        assert_eq!(parse("Self").node, TypeNode::SelfType);
        assert_eq!(parse("NoReturn").node, TypeNode::Never);
        assert_eq!(parse("Never").node, TypeNode::Never);
        assert_eq!(
            parse("AnyStr").node,
            TypeNode::TypeVarRef("AnyStr".to_string())
        );
        assert_eq!(parse("None").node, TypeNode::NoneType);
        assert_eq!(parse("object").node, TypeNode::Named("object".to_string()));
    }

    #[test]
    fn normalize_expands_bare_generics() {
        let t = normalize(&parse("Dict"));
        assert_eq!(render(&t), "Dict[Any, Any]");
        assert!(t.was_bare);
        assert_eq!(count_any(&t), 2);
        assert_eq!(render(&normalize(&parse("List"))), "List[Any]");
        assert_eq!(render(&normalize(&parse("Tuple"))), "Tuple[Any, ...]");
        assert_eq!(count_any(&normalize(&parse("Tuple"))), 1);
    }

    #[test]
    fn normalize_rewrites_optional_and_text() {
        assert_eq!(render(&normalize(&parse("Optional[int]"))), "Union[int, None]");
        assert_eq!(
            render(&normalize(&parse("Optional[Optional[int]]"))),
            "Union[int, None]"
        );
        assert_eq!(render(&normalize(&parse("Text"))), "str");
    }

    #[test]
    fn normalize_is_idempotent_on_examples() {
        for raw in [
            "Optional[Dict]",
            "Union[int, Union[str, None]]",
            "Callable",
            "Callable[[Dict, int], Optional[str]]",
            "Tuple",
            "List[Optional[int]]",
            "'Forward'",
        ] {
            let once = normalize(&parse(raw));
            let twice = normalize(&once);
            assert_eq!(render(&once), render(&twice), "normalize({raw}) not idempotent");
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn count_any_examples() {
        assert_eq!(count_any(&normalize(&parse("Dict[str, Any]"))), 1);
        assert_eq!(count_any(&normalize(&parse("Callable"))), 1);
        assert_eq!(count_any(&normalize(&parse("int"))), 0);
        assert_eq!(count_any(&normalize(&parse("Tuple[int, ...]"))), 0);
        assert_eq!(count_any(&normalize(&parse("Union[Any, List[Any]]"))), 2);
    }

    #[test]
    fn equality_ignores_bareness() {
        let bare = normalize(&parse("Callable"));
        let explicit = normalize(&parse("Callable[..., Any]"));
        assert_eq!(bare, explicit);
        assert!(bare.was_bare && !explicit.was_bare);
    }

    #[test]
    fn multiline_annotations_parse() {
        let t = parse("Dict[\n    str,\n    int,\n]");
        assert_eq!(render(&t), "Dict[str, int]");
    }
}
