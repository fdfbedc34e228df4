use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::*;
use crate::patch::Membership;
use crate::poly::{PolyExpr, Pos};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Str(String),
    Sym(&'static str),
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Str(_) => "string".to_string(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Newline => "end of line".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

const SYMBOLS: [&str; 16] = ["->", "=", ":", "{", "}", "(", ")", "[", "]", ",", ";", "/", "+", "-", "*", "^"];

/// Identifiers that end a polynomial instead of multiplying into it.
const STOP_WORDS: [&str; 1] = ["in"];

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<(Tok, Pos)> = Vec::new();
    // Newlines are insignificant inside parentheses and brackets.
    let mut nesting: Vec<char> = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            if !matches!(nesting.last(), Some('(') | Some('[')) && !matches!(out.last(), Some((Tok::Newline, _)) | None) {
                out.push((Tok::Newline, pos));
            }
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push((Tok::Int(s.parse().unwrap()), pos));
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(DslError::Syntax {
                            line,
                            col,
                            expected: vec!["closing `\"`".into()],
                            found: "end of line".into(),
                        })
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some('n') => s.push('\n'),
                            Some(&e @ ('"' | '\\')) => s.push(e),
                            other => {
                                return Err(DslError::Syntax {
                                    line,
                                    col: col + (i - start),
                                    expected: vec!["escape `\\\"`, `\\\\` or `\\n`".into()],
                                    found: other.map_or("end of input".into(), |c| format!("`\\{c}`")),
                                })
                            }
                        }
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            out.push((Tok::Str(s), pos));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
                return Err(DslError::Syntax { line, col, expected: vec!["token".into()], found: format!("`{c}`") });
            };
            match *sym {
                "(" | "[" | "{" => nesting.push(c),
                ")" | "]" | "}" => {
                    nesting.pop();
                }
                _ => {}
            }
            i += sym.len();
            out.push((Tok::Sym(sym), pos));
        }
        col += i - start;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    expected: BTreeSet<String>,
}

type PResult<T> = Result<T, DslError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if t.0 != Tok::Eof {
            self.at += 1;
        }
        self.expected.clear();
        t
    }

    fn expect_note(&mut self, what: &str) {
        self.expected.insert(what.to_string());
    }

    fn error(&mut self) -> DslError {
        let pos = self.pos();
        let expected = std::mem::take(&mut self.expected).into_iter().collect();
        DslError::Syntax { line: pos.line, col: pos.col, expected, found: self.peek().describe() }
    }

    fn fail<T>(&mut self, what: &str) -> PResult<T> {
        self.expect_note(what);
        Err(self.error())
    }

    fn is_sym(&mut self, s: &'static str) -> bool {
        if *self.peek() == Tok::Sym(s) {
            true
        } else {
            self.expect_note(&format!("`{s}`"));
            false
        }
    }

    fn eat_sym(&mut self, s: &'static str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.bump();
        }
        hit
    }

    fn sym(&mut self, s: &'static str) -> PResult<Pos> {
        let pos = self.pos();
        if self.eat_sym(s) {
            Ok(pos)
        } else {
            Err(self.error())
        }
    }

    fn is_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Ident(s) if s == kw) {
            true
        } else {
            self.expect_note(&format!("`{kw}`"));
            false
        }
    }

    fn kw(&mut self, kw: &str) -> PResult<Pos> {
        let pos = self.pos();
        if self.is_kw(kw) {
            self.bump();
            Ok(pos)
        } else {
            Err(self.error())
        }
    }

    fn name(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(text) => {
                let pos = self.bump().1;
                Ok(Name { text, pos })
            }
            _ => self.fail("identifier"),
        }
    }

    fn int(&mut self) -> PResult<BigInt> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            _ => self.fail("integer"),
        }
    }

    fn small<T: TryFrom<u64>>(&mut self) -> PResult<T> {
        let pos = self.pos();
        let n = self.int()?;
        n.to_u64()
            .and_then(|v| T::try_from(v).ok())
            .ok_or_else(|| DslError::Syntax { line: pos.line, col: pos.col, expected: vec!["small integer".into()], found: format!("`{n}`") })
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail("string"),
        }
    }

    fn end_of_decl(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline | Tok::Sym(";") => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => {
                self.expect_note("end of line");
                Err(self.error())
            }
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Tok::Newline | Tok::Sym(";")) {
            self.bump();
        }
    }

    // -- polynomials -------------------------------------------------------

    fn poly(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let expr = self.sum()?;
        Ok(Expr { expr, pos })
    }

    fn sum(&mut self) -> PResult<PolyExpr> {
        let mut lhs = self.product()?;
        loop {
            if self.eat_sym("+") {
                lhs = PolyExpr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat_sym("-") {
                lhs = PolyExpr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn starts_factor(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Sym("(") => true,
            Tok::Ident(s) => !STOP_WORDS.contains(&s.as_str()),
            _ => false,
        }
    }

    fn product(&mut self) -> PResult<PolyExpr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_sym("*") {
                lhs = PolyExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.starts_factor() {
                lhs = PolyExpr::Mul(Box::new(lhs), Box::new(self.power()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> PResult<PolyExpr> {
        if self.eat_sym("-") {
            return Ok(PolyExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<PolyExpr> {
        let base = self.atom()?;
        if self.eat_sym("^") {
            let e: u32 = self.small()?;
            return Ok(PolyExpr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<PolyExpr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(PolyExpr::Int(n))
            }
            Tok::Ident(s) if !STOP_WORDS.contains(&s.as_str()) => {
                let pos = self.bump().1;
                Ok(PolyExpr::Var(s, pos))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.sum()?;
                self.sym(")")?;
                Ok(e)
            }
            _ => {
                self.expect_note("integer");
                self.expect_note("identifier");
                self.expect_note("`(`");
                self.expect_note("`-`");
                Err(self.error())
            }
        }
    }

    /// `( poly, ... )`, possibly empty.
    fn poly_list(&mut self) -> PResult<Vec<Expr>> {
        self.sym("(")?;
        let mut out = Vec::new();
        if self.eat_sym(")") {
            return Ok(out);
        }
        loop {
            out.push(self.poly()?);
            if self.eat_sym(")") {
                return Ok(out);
            }
            self.sym(",")?;
        }
    }

    fn gen_list(&mut self, open: &'static str, close: &'static str) -> PResult<Vec<GenDecl>> {
        self.sym(open)?;
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            let var = self.name()?;
            self.sym(":")?;
            let degree = self.small()?;
            out.push(GenDecl { var, degree });
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.sym(",")?;
        }
    }

    /// Brace block of entries separated by `,`, `;` or line breaks.
    fn braced<T>(&mut self, mut entry: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        self.sym("{")?;
        let mut out = Vec::new();
        loop {
            while matches!(self.peek(), Tok::Newline | Tok::Sym(";") | Tok::Sym(",")) {
                self.bump();
            }
            if self.eat_sym("}") {
                return Ok(out);
            }
            out.push(entry(self)?);
            match self.peek() {
                Tok::Newline | Tok::Sym(";") | Tok::Sym(",") | Tok::Sym("}") => {}
                _ => {
                    self.expect_note("`,`");
                    self.expect_note("end of line");
                    return Err(self.error());
                }
            }
        }
    }

    fn assign(&mut self) -> PResult<Assign> {
        let var = self.name()?;
        self.sym("->")?;
        let value = self.poly()?;
        Ok(Assign { var, value })
    }

    fn assigns(&mut self) -> PResult<Vec<Assign>> {
        self.braced(Self::assign)
    }

    fn membership(&mut self) -> PResult<MembershipItem> {
        self.kw("assert")?;
        let kind = if self.is_kw("in") {
            Membership::In
        } else if self.is_kw("notin") {
            Membership::NotIn
        } else {
            return Err(self.error());
        };
        self.bump();
        let poly = self.poly()?;
        let provenance = self.string()?;
        Ok(MembershipItem { kind, poly, provenance })
    }

    fn ell_list(&mut self) -> PResult<Vec<u32>> {
        self.kw("l")?;
        self.sym("=")?;
        let mut out = vec![self.small()?];
        while self.eat_sym(",") {
            out.push(self.small()?);
        }
        Ok(out)
    }

    // -- declarations ------------------------------------------------------

    fn scenario(&mut self) -> PResult<Scenario> {
        let mut declarations = Vec::new();
        loop {
            self.skip_separators();
            if *self.peek() == Tok::Eof {
                return Ok(Scenario { declarations });
            }
            declarations.push(self.declaration()?);
            self.end_of_decl()?;
        }
    }

    fn declaration(&mut self) -> PResult<Declaration> {
        let pos = self.pos();
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => String::new(),
        };
        let decl = match kw.as_str() {
            "ring" => self.ring()?,
            "map" => self.map()?,
            "patch" => self.patch()?,
            "excise" => self.excise()?,
            "wdvv" => self.wdvv()?,
            "ledger" => self.ledger()?,
            "assert" => self.assertion()?,
            "note" => {
                self.bump();
                Decl::Note(self.string()?)
            }
            _ => {
                for k in ["ring", "map", "patch", "excise", "wdvv", "ledger", "assert", "note"] {
                    self.expect_note(&format!("`{k}`"));
                }
                return Err(self.error());
            }
        };
        Ok(Declaration { pos, decl })
    }

    fn ring(&mut self) -> PResult<Decl> {
        self.kw("ring")?;
        let name = self.name()?;
        self.sym("=")?;
        self.kw("Z")?;
        let gens = self.gen_list("[", "]")?;
        let relations = if self.eat_sym("/") { self.poly_list()? } else { Vec::new() };
        let provenance = match self.peek() {
            Tok::Str(_) => Some(self.string()?),
            _ => {
                self.expect_note("string");
                None
            }
        };
        Ok(Decl::Ring { name, gens, relations, provenance })
    }

    fn map(&mut self) -> PResult<Decl> {
        self.kw("map")?;
        let name = self.name()?;
        self.sym(":")?;
        let source = self.name()?;
        self.sym("->")?;
        let target = self.name()?;
        let images = self.assigns()?;
        Ok(Decl::Map { name, source, target, images })
    }

    fn patch(&mut self) -> PResult<Decl> {
        self.kw("patch")?;
        let name = self.name()?;
        let items = self.braced(|p| {
            let head = match p.peek() {
                Tok::Ident(s) => s.clone(),
                _ => String::new(),
            };
            Ok(match head.as_str() {
                "open" => {
                    p.bump();
                    PatchItem::Open(p.name()?)
                }
                "closed" => {
                    p.bump();
                    PatchItem::Closed(p.name()?)
                }
                "ctop" => {
                    p.bump();
                    PatchItem::Ctop(p.poly()?)
                }
                "gens" => {
                    p.bump();
                    PatchItem::Gens(p.gen_list("(", ")")?)
                }
                "j" => {
                    p.bump();
                    PatchItem::J(p.assigns()?)
                }
                "p" => {
                    p.bump();
                    PatchItem::P(p.assigns()?)
                }
                "classZ" => {
                    p.bump();
                    PatchItem::ClassZ(p.poly()?)
                }
                "annpre" => {
                    p.bump();
                    PatchItem::AnnPre(p.braced(|p| {
                        let a = p.poly()?;
                        p.sym("->")?;
                        Ok((a, p.poly()?))
                    })?)
                }
                "claim" => {
                    p.bump();
                    PatchItem::Claim(p.poly_list()?)
                }
                "assert" => PatchItem::Assert(p.membership()?),
                _ => {
                    for k in ["open", "closed", "ctop", "gens", "j", "p", "classZ", "annpre", "claim", "assert", "}"] {
                        p.expect_note(&format!("`{k}`"));
                    }
                    return Err(p.error());
                }
            })
        })?;
        Ok(Decl::Patch { name, items })
    }

    fn excise(&mut self) -> PResult<Decl> {
        self.kw("excise")?;
        let name = self.name()?;
        let items = self.braced(|p| {
            let head = match p.peek() {
                Tok::Ident(s) => s.clone(),
                _ => String::new(),
            };
            Ok(match head.as_str() {
                "ring" => {
                    p.bump();
                    ExciseItem::Ring(p.name()?)
                }
                "class" => {
                    p.bump();
                    ExciseItem::Class(p.poly_list()?)
                }
                "claim" => {
                    p.bump();
                    ExciseItem::Claim(p.poly_list()?)
                }
                "witness" => {
                    p.bump();
                    ExciseItem::Witness(p.assigns()?)
                }
                "assert" => ExciseItem::Assert(p.membership()?),
                _ => {
                    for k in ["ring", "class", "claim", "witness", "assert", "}"] {
                        p.expect_note(&format!("`{k}`"));
                    }
                    return Err(p.error());
                }
            })
        })?;
        Ok(Decl::Excise { name, items })
    }

    fn wdvv(&mut self) -> PResult<Decl> {
        self.kw("wdvv")?;
        let name = match self.peek() {
            Tok::Ident(_) => Some(self.name()?),
            _ => None,
        };
        let items = self.braced(|p| {
            let head = match p.peek() {
                Tok::Ident(s) => s.clone(),
                _ => String::new(),
            };
            Ok(match head.as_str() {
                "unknowns" => {
                    p.bump();
                    p.sym("(")?;
                    let mut ns = vec![p.name()?];
                    while p.eat_sym(",") {
                        ns.push(p.name()?);
                    }
                    p.sym(")")?;
                    WdvvItem::Unknowns(ns)
                }
                "eq" => {
                    p.bump();
                    let a = p.poly()?;
                    p.sym("=")?;
                    WdvvItem::Eq(a, p.poly()?)
                }
                "solve" => {
                    p.bump();
                    WdvvItem::Solve(p.name()?)
                }
                "expect" => {
                    p.bump();
                    let a = p.poly()?;
                    let b = if p.eat_sym("=") { Some(p.poly()?) } else { None };
                    WdvvItem::Expect(a, b)
                }
                _ => {
                    for k in ["unknowns", "eq", "solve", "expect", "}"] {
                        p.expect_note(&format!("`{k}`"));
                    }
                    return Err(p.error());
                }
            })
        })?;
        Ok(Decl::Wdvv { name, items })
    }

    fn ledger(&mut self) -> PResult<Decl> {
        self.kw("ledger")?;
        let head = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => String::new(),
        };
        let cmd = match head.as_str() {
            "node" => {
                self.bump();
                LedgerCmd::Node(self.name()?)
            }
            "axiom" => {
                self.bump();
                let node = self.name()?;
                let key = self.name()?;
                LedgerCmd::Axiom { node, key, provenance: self.string()? }
            }
            "edge" => {
                self.bump();
                LedgerCmd::Edge { x: self.name()?, z: self.name()?, u: self.name()? }
            }
            "derive" => {
                self.bump();
                let node = self.name()?;
                LedgerCmd::Derive { node, ells: self.ell_list()? }
            }
            "exact" => {
                self.bump();
                let (x, z, u) = (self.name()?, self.name()?, self.name()?);
                LedgerCmd::Exact { x, z, u, ells: self.ell_list()? }
            }
            _ => {
                for k in ["node", "axiom", "edge", "derive", "exact"] {
                    self.expect_note(&format!("`{k}`"));
                }
                return Err(self.error());
            }
        };
        Ok(Decl::Ledger(cmd))
    }

    fn assertion(&mut self) -> PResult<Decl> {
        self.kw("assert")?;
        let head = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => String::new(),
        };
        let cmd = match head.as_str() {
            "ideal_eq" => {
                self.bump();
                let left = self.poly_list()?;
                let right = self.poly_list()?;
                self.kw("in")?;
                AssertCmd::IdealEq { left, right, ring: self.name()? }
            }
            "graded" => {
                self.bump();
                let ring = self.name()?;
                self.kw("deg")?;
                let degree = self.small()?;
                self.kw("rank")?;
                let rank = self.small()?;
                self.kw("torsion")?;
                self.sym("[")?;
                let mut torsion = Vec::new();
                if !self.eat_sym("]") {
                    loop {
                        torsion.push(self.small()?);
                        if self.eat_sym("]") {
                            break;
                        }
                        self.sym(",")?;
                    }
                }
                AssertCmd::Graded { ring, degree, rank, torsion }
            }
            "nzd" => {
                self.bump();
                let poly = self.poly()?;
                self.kw("in")?;
                AssertCmd::Nzd { poly, ring: self.name()? }
            }
            "surjective" => {
                self.bump();
                let map = self.name()?;
                AssertCmd::Surjective { map, witness: self.assigns()? }
            }
            "image" => {
                self.bump();
                let map = self.name()?;
                let source = self.poly()?;
                self.sym("->")?;
                AssertCmd::Image { map, source, target: self.poly()? }
            }
            _ => {
                for k in ["ideal_eq", "graded", "nzd", "surjective", "image"] {
                    self.expect_note(&format!("`{k}`"));
                }
                return Err(self.error());
            }
        };
        Ok(Decl::Assert(cmd))
    }
}

/// Parses a scenario script. Positions are 1-based line and column.
pub fn parse(text: &str) -> Result<Scenario, DslError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, expected: BTreeSet::new() };
    p.scenario()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syntax(src: &str) -> (usize, usize, Vec<String>, String) {
        match parse(src) {
            Err(DslError::Syntax { line, col, expected, found }) => (line, col, expected, found),
            other => panic!("expected a syntax error, got {other:?}"),
        }
    }

    #[test]
    fn positions_and_expected_sets() {
        let (line, col, expected, found) = syntax("ring R = Z[a:1]\nmap f : R R { a -> a }\n");
        assert_eq!((line, col), (2, 11));
        assert_eq!(expected, vec!["`->`".to_string()]);
        assert_eq!(found, "`R`");

        let (line, col, expected, _) = syntax("\n\n  frobnicate x\n");
        assert_eq!((line, col), (3, 3));
        assert!(expected.contains(&"`ring`".to_string()) && expected.contains(&"`wdvv`".to_string()));

        let (_, _, expected, found) = syntax("ring R = Z[a:1] / (a +)\n");
        assert_eq!(found, "`)`");
        assert!(expected.contains(&"identifier".to_string()));
    }

    #[test]
    fn polynomial_positions() {
        let s = parse("ring R = Z[a:1]\nassert nzd 3 a\n  + b in R\n").unwrap_err();
        // `in` is missing on line 2, so the newline ends the declaration.
        assert_eq!(s.position().line, 2);
        let s = parse("assert nzd 3a + 2 bb in R\n").unwrap();
        let Decl::Assert(AssertCmd::Nzd { poly, .. }) = &s.declarations[0].decl else { panic!() };
        let ids = poly.expr.identifiers();
        assert_eq!(ids[1].0, "bb");
        assert_eq!((ids[1].1.line, ids[1].1.col), (1, 19));
    }

    #[test]
    fn blocks_accept_newlines_and_semicolons() {
        let a = parse("patch S { open U; closed Z; ctop -l1; gens (l1:1); j { l1 -> l1 }; p { l1 -> l1 }; classZ 0; claim () }").unwrap();
        let b = parse("patch S {\n  open U\n  closed Z\n  ctop -l1\n  gens (l1:1)\n  j {\n    l1 -> l1\n  }\n  p { l1 -> l1 }\n  classZ 0\n  claim ()\n}\n").unwrap();
        assert_eq!(a.to_string(), b.to_string());
    }

    #[test]
    fn multi_line_lists() {
        let s = parse("ring R = Z[a:1,\n  b:1] / (a^2,\n  b^2)\n").unwrap();
        let Decl::Ring { relations, .. } = &s.declarations[0].decl else { panic!() };
        assert_eq!(relations.len(), 2);
        assert_eq!(relations[1].pos, Pos { line: 3, col: 3 });
    }

    #[test]
    fn unterminated_string() {
        let (line, _, expected, _) = syntax("note \"abc\n");
        assert_eq!(line, 1);
        assert_eq!(expected, vec!["closing `\"`".to_string()]);
    }

    #[test]
    fn ledger_lists() {
        let s = parse("ledger derive M l=2,3\nledger exact X Z U l=2").unwrap();
        assert_eq!(s.declarations.len(), 2);
        let Decl::Ledger(LedgerCmd::Derive { ells, .. }) = &s.declarations[0].decl else { panic!() };
        assert_eq!(ells, &vec![2, 3]);
    }
}
