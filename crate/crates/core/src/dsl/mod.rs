//! Scenario scripts: syntax tree, parser, semantic pass and runner.
//!
//! Scripts are line oriented with `#` comments; blocks in braces take one
//! item per line or `;`-separated items.

mod parse;
mod run;
mod sema;

pub mod oracle;

use std::fmt;

use crate::patch::Membership;
use crate::poly::{PolyExpr, Pos};

pub use parse::parse;
pub use run::{run, run_text, Config, DeclRecord, Report, CONFIG_ENV, ENGINE};
pub use sema::{check, Program};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DslError {
    #[error("{line}:{col}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax { line: usize, col: usize, expected: Vec<String>, found: String },
    #[error("{line}:{col}: {msg}")]
    Semantic { line: usize, col: usize, msg: String },
}

impl DslError {
    pub fn position(&self) -> Pos {
        match self {
            DslError::Syntax { line, col, .. } | DslError::Semantic { line, col, .. } => Pos { line: *line, col: *col },
        }
    }

    pub(crate) fn semantic(pos: Pos, msg: impl Into<String>) -> Self {
        DslError::Semantic { line: pos.line, col: pos.col, msg: msg.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Name {
    pub text: String,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub expr: PolyExpr,
    pub pos: Pos,
}

/// `v -> poly`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assign {
    pub var: Name,
    pub value: Expr,
}

/// `v:deg`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenDecl {
    pub var: Name,
    pub degree: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipItem {
    pub kind: Membership,
    pub poly: Expr,
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatchItem {
    Open(Name),
    Closed(Name),
    Ctop(Expr),
    Gens(Vec<GenDecl>),
    J(Vec<Assign>),
    P(Vec<Assign>),
    ClassZ(Expr),
    AnnPre(Vec<(Expr, Expr)>),
    Claim(Vec<Expr>),
    Assert(MembershipItem),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExciseItem {
    Ring(Name),
    Class(Vec<Expr>),
    Claim(Vec<Expr>),
    Witness(Vec<Assign>),
    Assert(MembershipItem),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WdvvItem {
    Unknowns(Vec<Name>),
    Eq(Expr, Expr),
    Solve(Name),
    /// `expect P = Q`; a bare `expect P` means `P = 0`.
    Expect(Expr, Option<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LedgerCmd {
    Node(Name),
    Axiom { node: Name, key: Name, provenance: String },
    Edge { x: Name, z: Name, u: Name },
    Derive { node: Name, ells: Vec<u32> },
    Exact { x: Name, z: Name, u: Name, ells: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AssertCmd {
    IdealEq { left: Vec<Expr>, right: Vec<Expr>, ring: Name },
    Graded { ring: Name, degree: u32, rank: usize, torsion: Vec<u64> },
    Nzd { poly: Expr, ring: Name },
    Surjective { map: Name, witness: Vec<Assign> },
    Image { map: Name, source: Expr, target: Expr },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Ring { name: Name, gens: Vec<GenDecl>, relations: Vec<Expr>, provenance: Option<String> },
    Map { name: Name, source: Name, target: Name, images: Vec<Assign> },
    Patch { name: Name, items: Vec<PatchItem> },
    Excise { name: Name, items: Vec<ExciseItem> },
    Wdvv { name: Option<Name>, items: Vec<WdvvItem> },
    Ledger(LedgerCmd),
    Assert(AssertCmd),
    Note(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Declaration {
    pub pos: Pos,
    pub decl: Decl,
}

impl Declaration {
    pub fn kind(&self) -> &'static str {
        match &self.decl {
            Decl::Ring { .. } => "ring",
            Decl::Map { .. } => "map",
            Decl::Patch { .. } => "patch",
            Decl::Excise { .. } => "excise",
            Decl::Wdvv { .. } => "wdvv",
            Decl::Ledger(_) => "ledger",
            Decl::Assert(_) => "assert",
            Decl::Note(_) => "note",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scenario {
    pub declarations: Vec<Declaration>,
}

impl Scenario {
    pub fn count(&self, kind: &str) -> usize {
        self.declarations.iter().filter(|d| d.kind() == kind).count()
    }
}

// ---------------------------------------------------------------------------
// Canonical printing

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn exprs(es: &[Expr]) -> String {
    es.iter().map(|e| e.expr.to_string()).collect::<Vec<_>>().join(", ")
}

fn assigns(a: &[Assign]) -> String {
    a.iter().map(|a| format!("{} -> {}", a.var.text, a.value.expr)).collect::<Vec<_>>().join(", ")
}

fn gens(g: &[GenDecl]) -> String {
    g.iter().map(|g| format!("{}:{}", g.var.text, g.degree)).collect::<Vec<_>>().join(", ")
}

fn ells(ls: &[u32]) -> String {
    ls.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

fn membership(m: &MembershipItem) -> String {
    let kw = match m.kind {
        Membership::In => "in",
        Membership::NotIn => "notin",
    };
    format!("assert {kw} {} {}", m.poly.expr, quote(&m.provenance))
}

impl fmt::Display for PatchItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatchItem::Open(n) => write!(f, "open {}", n.text),
            PatchItem::Closed(n) => write!(f, "closed {}", n.text),
            PatchItem::Ctop(e) => write!(f, "ctop {}", e.expr),
            PatchItem::Gens(g) => write!(f, "gens ({})", gens(g)),
            PatchItem::J(a) => write!(f, "j {{ {} }}", assigns(a)),
            PatchItem::P(a) => write!(f, "p {{ {} }}", assigns(a)),
            PatchItem::ClassZ(e) => write!(f, "classZ {}", e.expr),
            PatchItem::AnnPre(pairs) => {
                let s: Vec<String> = pairs.iter().map(|(a, b)| format!("{} -> {}", a.expr, b.expr)).collect();
                write!(f, "annpre {{ {} }}", s.join(", "))
            }
            PatchItem::Claim(es) => write!(f, "claim ({})", exprs(es)),
            PatchItem::Assert(m) => f.write_str(&membership(m)),
        }
    }
}

impl fmt::Display for ExciseItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExciseItem::Ring(n) => write!(f, "ring {}", n.text),
            ExciseItem::Class(es) => write!(f, "class ({})", exprs(es)),
            ExciseItem::Claim(es) => write!(f, "claim ({})", exprs(es)),
            ExciseItem::Witness(a) => write!(f, "witness {{ {} }}", assigns(a)),
            ExciseItem::Assert(m) => f.write_str(&membership(m)),
        }
    }
}

impl fmt::Display for WdvvItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WdvvItem::Unknowns(ns) => {
                write!(f, "unknowns ({})", ns.iter().map(|n| n.text.as_str()).collect::<Vec<_>>().join(", "))
            }
            WdvvItem::Eq(a, b) => write!(f, "eq {} = {}", a.expr, b.expr),
            WdvvItem::Solve(n) => write!(f, "solve {}", n.text),
            WdvvItem::Expect(a, None) => write!(f, "expect {}", a.expr),
            WdvvItem::Expect(a, Some(b)) => write!(f, "expect {} = {}", a.expr, b.expr),
        }
    }
}

fn block<T: fmt::Display>(f: &mut fmt::Formatter<'_>, head: &str, items: &[T]) -> fmt::Result {
    writeln!(f, "{head} {{")?;
    for it in items {
        writeln!(f, "  {it}")?;
    }
    write!(f, "}}")
}

impl fmt::Display for Declaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.decl {
            Decl::Ring { name, gens: g, relations, provenance } => {
                write!(f, "ring {} = Z[{}] / ({})", name.text, gens(g), exprs(relations))?;
                if let Some(p) = provenance {
                    write!(f, " {}", quote(p))?;
                }
                Ok(())
            }
            Decl::Map { name, source, target, images } => {
                write!(f, "map {} : {} -> {} {{ {} }}", name.text, source.text, target.text, assigns(images))
            }
            Decl::Patch { name, items } => block(f, &format!("patch {}", name.text), items),
            Decl::Excise { name, items } => block(f, &format!("excise {}", name.text), items),
            Decl::Wdvv { name, items } => {
                let head = match name {
                    Some(n) => format!("wdvv {}", n.text),
                    None => "wdvv".to_string(),
                };
                block(f, &head, items)
            }
            Decl::Ledger(cmd) => match cmd {
                LedgerCmd::Node(n) => write!(f, "ledger node {}", n.text),
                LedgerCmd::Axiom { node, key, provenance } => {
                    write!(f, "ledger axiom {} {} {}", node.text, key.text, quote(provenance))
                }
                LedgerCmd::Edge { x, z, u } => write!(f, "ledger edge {} {} {}", x.text, z.text, u.text),
                LedgerCmd::Derive { node, ells: ls } => write!(f, "ledger derive {} l={}", node.text, ells(ls)),
                LedgerCmd::Exact { x, z, u, ells: ls } => {
                    write!(f, "ledger exact {} {} {} l={}", x.text, z.text, u.text, ells(ls))
                }
            },
            Decl::Assert(a) => match a {
                AssertCmd::IdealEq { left, right, ring } => {
                    write!(f, "assert ideal_eq ({}) ({}) in {}", exprs(left), exprs(right), ring.text)
                }
                AssertCmd::Graded { ring, degree, rank, torsion } => {
                    let t: Vec<String> = torsion.iter().map(u64::to_string).collect();
                    write!(f, "assert graded {} deg {degree} rank {rank} torsion [{}]", ring.text, t.join(", "))
                }
                AssertCmd::Nzd { poly, ring } => write!(f, "assert nzd {} in {}", poly.expr, ring.text),
                AssertCmd::Surjective { map, witness } => {
                    write!(f, "assert surjective {} {{ {} }}", map.text, assigns(witness))
                }
                AssertCmd::Image { map, source, target } => {
                    write!(f, "assert image {} {} -> {}", map.text, source.expr, target.expr)
                }
            },
            Decl::Note(s) => write!(f, "note {}", quote(s)),
        }
    }
}

/// Canonical form: one declaration per line, blocks expanded, comments
/// dropped.
impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.declarations {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let src = "# comment\nring R = Z[a:1,b:2]/(a^2-b, 2 a b) \"given\"\nmap f : R -> R { a -> -a, b -> b }\n\
                   wdvv { unknowns (u); eq 2u = 4 a; expect u = 2a }\nnote \"a \\\"quoted\\\" note\"\n";
        let once = parse(src).unwrap().to_string();
        let twice = parse(&once).unwrap().to_string();
        assert_eq!(once, twice);
        assert!(once.starts_with("ring R = Z[a:1, b:2] / (a^2 - b, 2*a*b) \"given\"\n"), "{once}");
    }

    #[test]
    fn empty_file() {
        assert_eq!(parse("").unwrap(), Scenario::default());
        assert_eq!(parse("# only a comment\n\n").unwrap(), Scenario::default());
    }
}
