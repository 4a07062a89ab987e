//! Deterministic generators for tests and benchmarks.
//!
//! Everything here is seeded and dependency-free so that property tests,
//! the synthetic-corpus determinism checks, and the robustness fuzz loop
//! reproduce exactly from a printed seed. Not part of the stable API.

use std::fs;
use std::path::Path;

use crate::typeexpr::{CallableParams, TypeExpr, TypeNode};

/// A small splitmix64 generator; statistical quality is more than enough
/// for shuffling fixtures, and it has no global state.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish value in `0..n`. Modulo bias is irrelevant at test sizes.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, num: usize, den: usize) -> bool {
        self.below(den) < num
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            items.swap(i, self.below(i + 1));
        }
    }
}

// ---------------------------------------------------------------------------
// Random type expressions
// ---------------------------------------------------------------------------

const NAMED: [&str; 7] = ["int", "str", "float", "bytes", "bool", "Widget", "pkg.Thing"];
const TYPEVARS: [&str; 2] = ["T", "U"];

fn leaf(rng: &mut Rng) -> TypeExpr {
    match rng.below(6) {
        0 => TypeExpr::any(),
        1 => TypeExpr::new(TypeNode::NoneType),
        2 => TypeExpr::new(TypeNode::Named(rng.pick(&NAMED).to_string())),
        3 => TypeExpr::new(TypeNode::TypeVarRef(rng.pick(&TYPEVARS).to_string())),
        4 => TypeExpr::new(TypeNode::Never),
        // A bare generic as the parser produces it: name only, flagged bare.
        _ => TypeExpr {
            node: TypeNode::Named(rng.pick(&["Dict", "List", "Iterable"]).to_string()),
            was_bare: true,
        },
    }
}

/// A random (possibly unnormalized) type expression: nested unions,
/// `Optional[...]` sugar, bare generics, forwards — the raw shapes
/// normalization has to canonicalize.
pub fn gen_type_expr(rng: &mut Rng, budget: usize) -> TypeExpr {
    if budget == 0 || rng.chance(1, 4) {
        return leaf(rng);
    }
    let next = budget - 1;
    match rng.below(7) {
        0 => {
            let head = rng.pick(&["List", "Set", "Sequence", "Optional", "Type"]);
            TypeExpr::new(TypeNode::Generic {
                head: head.to_string(),
                args: vec![gen_type_expr(rng, next)],
            })
        }
        1 => {
            let head = rng.pick(&["Dict", "Mapping"]);
            TypeExpr::new(TypeNode::Generic {
                head: head.to_string(),
                args: vec![gen_type_expr(rng, next), gen_type_expr(rng, next)],
            })
        }
        2 => {
            let mut args = vec![gen_type_expr(rng, next)];
            if rng.chance(1, 2) {
                args.push(TypeExpr::new(TypeNode::EllipsisMarker));
            } else {
                args.push(gen_type_expr(rng, next));
            }
            TypeExpr::new(TypeNode::Generic {
                head: "Tuple".to_string(),
                args,
            })
        }
        3 => {
            let params = if rng.chance(1, 3) {
                CallableParams::Ellipsis
            } else {
                let n = rng.below(3);
                CallableParams::List((0..n).map(|_| gen_type_expr(rng, next)).collect())
            };
            TypeExpr::new(TypeNode::Callable {
                params,
                ret: Box::new(gen_type_expr(rng, next)),
            })
        }
        4 => {
            let n = 2 + rng.below(3);
            TypeExpr::new(TypeNode::Union(
                (0..n).map(|_| gen_type_expr(rng, next)).collect(),
            ))
        }
        5 => TypeExpr::new(TypeNode::Forward(Box::new(gen_type_expr(rng, next)))),
        _ => leaf(rng),
    }
}

// ---------------------------------------------------------------------------
// Synthetic stub-filter projects
// ---------------------------------------------------------------------------

/// What `synthetic_filter_source` injected, for exact-arithmetic checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterPlan {
    /// Total annotated declarations (every one carries ≥ 1 `Any`).
    pub total: usize,
    /// Declarations whose rendered line duplicates an earlier one.
    pub duplicates: usize,
    /// Methods whose only `Any` is the unannotated receiver.
    pub self_only: usize,
}

const UNIQUE_SHAPES: [(&str, &str); 4] = [
    ("a: Any", "int"),
    ("a: Any, b: int", "str"),
    ("items: Dict[str, Any]", "bool"),
    ("xs: List[Any]", "None"),
];

/// A Python source with exactly `plan.total` Any-carrying declarations:
/// `plan.self_only` receiver-only methods, `plan.duplicates` exact repeats
/// of earlier signatures, and unique signatures for the rest. Definition
/// order is shuffled where the language allows (repeats must follow their
/// originals, which rebinding makes legal anyway).
pub fn synthetic_filter_source(rng: &mut Rng, plan: FilterPlan) -> String {
    assert!(plan.self_only + plan.duplicates <= plan.total, "plan overflows total");
    let uniques = plan.total - plan.self_only - plan.duplicates;
    assert!(
        plan.duplicates == 0 || uniques > 0,
        "duplicates need an original to repeat"
    );

    let mut out = String::from("from typing import Any, Dict, List\n");
    out.push_str("class Holder:\n");
    if plan.self_only == 0 {
        out.push_str("    pass\n");
    }
    for i in 0..plan.self_only {
        out.push_str(&format!("    def m{i}(self) -> None:\n        pass\n"));
    }

    let mut defs: Vec<String> = Vec::new();
    let mut originals: Vec<usize> = Vec::new();
    for i in 0..uniques {
        let (params, ret) = rng.pick(&UNIQUE_SHAPES);
        defs.push(format!("def f{i}({params}) -> {ret}:\n    pass\n"));
        originals.push(i);
    }
    let mut dups: Vec<String> = Vec::new();
    for _ in 0..plan.duplicates {
        let which = *rng.pick(&originals);
        dups.push(defs[which].clone());
    }
    rng.shuffle(&mut defs);
    // Repeats go after the originals they shadow; shuffling them among
    // themselves is still fair game.
    rng.shuffle(&mut dups);
    for d in defs.into_iter().chain(dups) {
        out.push_str(&d);
    }
    out
}

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

fn synthetic_module(rng: &mut Rng, index: usize) -> String {
    let mut out = String::from("from typing import Any, Callable, Dict, List, TypeVar\n\n");
    if rng.chance(1, 3) {
        out.push_str(&format!("T{index} = TypeVar('T{index}')\n"));
    }
    if rng.chance(1, 4) {
        out.push_str(&format!("U{index} = TypeVar('U{index}', bound=int)\n"));
    }
    let defs = 2 + rng.below(4);
    for d in 0..defs {
        match rng.below(6) {
            0 => out.push_str(&format!(
                "def plain_{index}_{d}(a: int, b: str) -> bool:\n    return a > len(b)\n\n"
            )),
            1 => out.push_str(&format!(
                "def dictish_{index}_{d}(item: Dict[str, Any]) -> Any:\n    return item['price']\n\n"
            )),
            2 => out.push_str(&format!(
                "def wrap_{index}_{d}(fn: Callable) -> Callable:\n    def inner(*args, **kwargs):\n        return fn(*args, **kwargs)\n    return inner\n\n"
            )),
            3 => out.push_str(&format!(
                "def boom_{index}_{d}(msg: str) -> Any:\n    raise ValueError(msg)\n\n"
            )),
            4 => out.push_str(&format!(
                "def ident_{index}_{d}(x: Any) -> Any:\n    return x\n\n"
            )),
            _ => out.push_str(&format!(
                "class Shape{index}_{d}:\n    def move(self, dx: int) -> Any:\n        self.x = dx\n        return self\n\n"
            )),
        }
    }
    if rng.chance(1, 5) {
        out.push_str(&format!("registry_{index}: Dict[str, Any] = {{}}\n"));
    }
    out
}

/// Write a corpus of `projects` subdirectories with `files_per_project`
/// generated modules each (plus the occasional config file). Content is a
/// pure function of the seed. Returns the total file count written.
pub fn write_synthetic_corpus(
    root: &Path,
    projects: usize,
    files_per_project: usize,
    seed: u64,
) -> usize {
    let mut rng = Rng::new(seed);
    let mut total = 0;
    for p in 0..projects {
        let project = root.join(format!("proj{p:03}"));
        let pkg = project.join("src");
        fs::create_dir_all(&pkg).expect("create corpus dirs");
        for f in 0..files_per_project {
            let path = pkg.join(format!("mod{f:04}.py"));
            fs::write(&path, synthetic_module(&mut rng, p * 10_000 + f))
                .expect("write corpus file");
            total += 1;
        }
        match rng.below(4) {
            0 => fs::write(
                project.join("mypy.ini"),
                "[mypy]\ndisallow_untyped_defs = True\ndisallow_any_generics = True\n",
            )
            .expect("write config"),
            1 => fs::write(project.join("pyproject.toml"), "[tool.mypy]\nstrict = true\n")
                .expect("write config"),
            2 => fs::write(project.join("setup.cfg"), "[mypy]\nignore_missing_imports = True\n")
                .expect("write config"),
            _ => {}
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Malformed-source mutation
// ---------------------------------------------------------------------------

const SEED_SOURCES: [&str; 5] = [
    "from typing import Any, Dict\n\ndef f(a: Any, b: Dict[str, Any]) -> bool:\n    return a == b\n",
    "class C:\n    def m(self, x: int) -> 'C':\n        return self\n",
    "import typing as t\nX = t.TypeVar('X')\ndef g(x: X) -> X:\n    return x\n",
    "async def h(*args: int, **kw: str) -> None:\n    await thing()\n",
    "def k():\n    # type: ignore[override]\n    raise ValueError('\\u00e9')\n",
];

/// A mutated, frequently invalid source file: truncations, byte splices,
/// invalid UTF-8, shuffled indentation, or outright random bytes. Feed the
/// result to `parse_source_bytes`; nothing it produces should ever panic.
pub fn mutate_source(rng: &mut Rng) -> Vec<u8> {
    let base = rng.pick(&SEED_SOURCES).as_bytes().to_vec();
    let mut bytes = base;
    let mutations = 1 + rng.below(4);
    for _ in 0..mutations {
        if bytes.is_empty() {
            bytes.push(rng.next_u64() as u8);
            continue;
        }
        match rng.below(7) {
            // Truncate mid-token.
            0 => bytes.truncate(rng.below(bytes.len() + 1)),
            // Insert raw bytes, often invalid UTF-8.
            1 => {
                let at = rng.below(bytes.len() + 1);
                let n = 1 + rng.below(8);
                let junk: Vec<u8> = (0..n).map(|_| rng.next_u64() as u8).collect();
                bytes.splice(at..at, junk);
            }
            // Overwrite a region with one repeated delimiter.
            2 => {
                let at = rng.below(bytes.len());
                let end = (at + 1 + rng.below(12)).min(bytes.len());
                let ch = *rng.pick(b"([{)]}:,.\\\"'#");
                bytes[at..end].fill(ch);
            }
            // Duplicate a chunk (unbalances blocks and brackets).
            3 => {
                let at = rng.below(bytes.len());
                let end = (at + 1 + rng.below(32)).min(bytes.len());
                let chunk: Vec<u8> = bytes[at..end].to_vec();
                let dest = rng.below(bytes.len() + 1);
                bytes.splice(dest..dest, chunk);
            }
            // Corrupt indentation.
            4 => {
                let tab_or_space = if rng.chance(1, 2) { b'\t' } else { b' ' };
                let at = rng.below(bytes.len() + 1);
                bytes.splice(at..at, std::iter::repeat(tab_or_space).take(1 + rng.below(6)));
            }
            // Delete a span.
            5 => {
                let at = rng.below(bytes.len());
                let end = (at + 1 + rng.below(16)).min(bytes.len());
                bytes.drain(at..end);
            }
            // Replace everything with random bytes.
            _ => {
                let n = rng.below(200);
                bytes = (0..n).map(|_| rng.next_u64() as u8).collect();
            }
        }
    }
    bytes
}
