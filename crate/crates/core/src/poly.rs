//! Sparse multivariate polynomials over the integers with positive
//! per-variable weights, plus the monomial orders used by the Gröbner engine.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("context mismatch: `{left}` vs `{right}`")]
    ContextMismatch { left: String, right: String },
    #[error("duplicate variable `{0}` in context")]
    DuplicateVariable(String),
    #[error("variable `{0}` must have a positive weight")]
    NonPositiveWeight(String),
    #[error("unknown variable `{name}` at line {line}, column {col}")]
    UnknownVariable { name: String, line: usize, col: usize },
    #[error("variable `{0}` has no counterpart in the target context")]
    NotInTarget(String),
    #[error("zero polynomial has no leading term")]
    ZeroInput,
    #[error("parse error at column {col}: {msg}")]
    Parse { col: usize, msg: String },
}

/// Ordered, named generators with positive weights (degrees).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarContext {
    name: String,
    vars: Vec<String>,
    weights: Vec<u32>,
}

pub type Ctx = Arc<VarContext>;

impl VarContext {
    pub fn new(name: impl Into<String>, vars: &[(&str, u32)]) -> Result<Ctx, PolyError> {
        Self::from_owned(name, vars.iter().map(|(v, w)| (v.to_string(), *w)).collect())
    }

    pub fn from_owned(name: impl Into<String>, vars: Vec<(String, u32)>) -> Result<Ctx, PolyError> {
        let mut names: Vec<String> = Vec::with_capacity(vars.len());
        let mut weights = Vec::with_capacity(vars.len());
        for (v, w) in vars {
            if names.contains(&v) {
                return Err(PolyError::DuplicateVariable(v));
            }
            if w == 0 {
                return Err(PolyError::NonPositiveWeight(v));
            }
            names.push(v);
            weights.push(w);
        }
        Ok(Arc::new(VarContext { name: name.into(), vars: names, weights }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn var_name(&self, i: usize) -> &str {
        &self.vars[i]
    }

    pub fn weight(&self, i: usize) -> u32 {
        self.weights[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Contexts are interchangeable when they carry the same variables and
    /// weights; the name is only a label.
    pub fn compatible(&self, other: &VarContext) -> bool {
        self.vars == other.vars && self.weights == other.weights
    }

    /// A new context with `extra` variables placed in front.
    pub fn prepend(&self, name: impl Into<String>, extra: &[(String, u32)]) -> Result<Ctx, PolyError> {
        let mut all: Vec<(String, u32)> = extra.to_vec();
        all.extend(self.vars.iter().cloned().zip(self.weights.iter().copied()));
        Self::from_owned(name, all)
    }

    /// A variable name that does not clash with this context.
    pub fn fresh_name(&self, base: &str) -> String {
        let mut cand = base.to_string();
        let mut k = 0;
        while self.index_of(&cand).is_some() {
            k += 1;
            cand = format!("{base}{k}");
        }
        cand
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    exps: Vec<u32>,
    degree: u32,
}

impl Monomial {
    pub fn new(exps: Vec<u32>, weights: &[u32]) -> Self {
        debug_assert_eq!(exps.len(), weights.len());
        let degree = exps.iter().zip(weights).map(|(e, w)| e * w).sum();
        Monomial { exps, degree }
    }

    pub fn one(nvars: usize) -> Self {
        Monomial { exps: vec![0; nvars], degree: 0 }
    }

    pub fn var(ctx: &VarContext, i: usize) -> Self {
        let mut exps = vec![0; ctx.nvars()];
        exps[i] = 1;
        Monomial { exps, degree: ctx.weight(i) }
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    /// Weighted degree.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_one(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
            degree: self.degree + other.degree,
        }
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming `self` divides `other`.
    pub fn cofactor_in(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: other.exps.iter().zip(&self.exps).map(|(b, a)| b - a).collect(),
            degree: other.degree - self.degree,
        }
    }

    pub fn lcm(&self, other: &Monomial, weights: &[u32]) -> Monomial {
        Monomial::new(self.exps.iter().zip(&other.exps).map(|(a, b)| *a.max(b)).collect(), weights)
    }

    pub fn coprime(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| *a == 0 || *b == 0)
    }

    pub fn uses(&self, var: usize) -> bool {
        self.exps[var] > 0
    }

    fn fmt_in(&self, ctx: &VarContext, f: &mut impl fmt::Write) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_char('*')?;
            }
            first = false;
            f.write_str(ctx.var_name(i))?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        if first {
            f.write_char('1')?;
        }
        Ok(())
    }

    pub fn display(&self, ctx: &VarContext) -> String {
        let mut s = String::new();
        self.fmt_in(ctx, &mut s).unwrap();
        s
    }
}

// ---------------------------------------------------------------------------
// Monomial orders

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum OrderKind {
    /// Weighted degree, ties broken reverse-lexicographically with the
    /// first declared variable being the largest.
    WeightedGrevlex,
    /// The front variables are compared first (weighted grevlex), the
    /// remaining variables then by `inner`.
    BlockElimination { front: Vec<usize>, inner: Box<OrderKind> },
}

#[derive(Clone, Debug)]
pub struct MonomialOrder {
    ctx: Ctx,
    kind: OrderKind,
}

fn grevlex_cmp(a: &[u32], b: &[u32], weights: &[u32], active: &dyn Fn(usize) -> bool) -> Ordering {
    let mut da = 0u64;
    let mut db = 0u64;
    for i in 0..a.len() {
        if active(i) {
            da += u64::from(a[i]) * u64::from(weights[i]);
            db += u64::from(b[i]) * u64::from(weights[i]);
        }
    }
    da.cmp(&db).then_with(|| {
        for i in (0..a.len()).rev() {
            if active(i) && a[i] != b[i] {
                return b[i].cmp(&a[i]);
            }
        }
        Ordering::Equal
    })
}

fn kind_cmp(kind: &OrderKind, a: &[u32], b: &[u32], weights: &[u32], active: &dyn Fn(usize) -> bool) -> Ordering {
    match kind {
        OrderKind::WeightedGrevlex => grevlex_cmp(a, b, weights, active),
        OrderKind::BlockElimination { front, inner } => {
            let in_front = |i: usize| active(i) && front.binary_search(&i).is_ok();
            let in_rest = |i: usize| active(i) && front.binary_search(&i).is_err();
            grevlex_cmp(a, b, weights, &in_front).then_with(|| kind_cmp(inner, a, b, weights, &in_rest))
        }
    }
}

impl MonomialOrder {
    pub fn grevlex(ctx: &Ctx) -> Self {
        MonomialOrder { ctx: ctx.clone(), kind: OrderKind::WeightedGrevlex }
    }

    /// Elimination order for the variables in `front` (indices into `ctx`).
    pub fn block(ctx: &Ctx, front: &[usize]) -> Self {
        let mut front = front.to_vec();
        front.sort_unstable();
        front.dedup();
        MonomialOrder {
            ctx: ctx.clone(),
            kind: OrderKind::BlockElimination { front, inner: Box::new(OrderKind::WeightedGrevlex) },
        }
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn kind(&self) -> &OrderKind {
        &self.kind
    }

    pub fn cmp(&self, a: &Monomial, b: &Monomial) -> Ordering {
        if let OrderKind::WeightedGrevlex = self.kind {
            // cached degree shortcut
            match a.degree.cmp(&b.degree) {
                Ordering::Equal => {}
                o => return o,
            }
            for i in (0..a.exps.len()).rev() {
                if a.exps[i] != b.exps[i] {
                    return b.exps[i].cmp(&a.exps[i]);
                }
            }
            return Ordering::Equal;
        }
        kind_cmp(&self.kind, &a.exps, &b.exps, self.ctx.weights(), &|_| true)
    }
}

impl PartialEq for MonomialOrder {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.ctx.compatible(&other.ctx)
    }
}

/// All monomials of weighted degree exactly `d`, sorted descending in the
/// default weighted grevlex order.
pub fn monomials_of_degree(ctx: &Ctx, d: u32) -> Vec<Monomial> {
    fn rec(ctx: &VarContext, i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if i == ctx.nvars() {
            if left == 0 {
                out.push(Monomial::new(cur.clone(), ctx.weights()));
            }
            return;
        }
        let w = ctx.weight(i);
        for e in 0..=left / w {
            cur[i] = e;
            rec(ctx, i + 1, left - e * w, cur, out);
        }
        cur[i] = 0;
    }
    let mut out = Vec::new();
    let mut cur = vec![0; ctx.nvars()];
    rec(ctx, 0, d, &mut cur, &mut out);
    let order = MonomialOrder::grevlex(ctx);
    out.sort_by(|a, b| order.cmp(b, a));
    out
}

// ---------------------------------------------------------------------------
// Polynomials

#[derive(Clone, Debug)]
pub struct Polynomial {
    ctx: Ctx,
    terms: BTreeMap<Monomial, BigInt>,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.compatible(&other.ctx) && self.terms == other.terms
    }
}

impl Eq for Polynomial {}

impl Polynomial {
    pub fn zero(ctx: &Ctx) -> Self {
        Polynomial { ctx: ctx.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(ctx: &Ctx, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(ctx);
        p.add_term(Monomial::one(ctx.nvars()), c.into());
        p
    }

    pub fn one(ctx: &Ctx) -> Self {
        Self::constant(ctx, 1)
    }

    pub fn var(ctx: &Ctx, i: usize) -> Self {
        let mut p = Self::zero(ctx);
        p.add_term(Monomial::var(ctx, i), BigInt::one());
        p
    }

    pub fn var_named(ctx: &Ctx, name: &str) -> Result<Self, PolyError> {
        ctx.index_of(name)
            .map(|i| Self::var(ctx, i))
            .ok_or_else(|| PolyError::UnknownVariable { name: name.to_string(), line: 0, col: 0 })
    }

    pub fn from_terms(ctx: &Ctx, terms: impl IntoIterator<Item = (Monomial, BigInt)>) -> Self {
        let mut p = Self::zero(ctx);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn monomial(ctx: &Ctx, m: Monomial, c: impl Into<BigInt>) -> Self {
        Self::from_terms(ctx, [(m, c.into())])
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Constant value if the polynomial has no non-constant terms.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn check_ctx(&self, other: &Polynomial) -> Result<(), PolyError> {
        if Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx.compatible(&other.ctx) {
            Ok(())
        } else {
            Err(PolyError::ContextMismatch {
                left: self.ctx.name().to_string(),
                right: other.ctx.name().to_string(),
            })
        }
    }

    pub fn try_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_ctx(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_ctx(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_ctx(other)?;
        let mut out = Polynomial::zero(&self.ctx);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigInt) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(&self.ctx);
        }
        Polynomial { ctx: self.ctx.clone(), terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &BigInt) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(&self.ctx);
        }
        Polynomial { ctx: self.ctx.clone(), terms: self.terms.iter().map(|(n, x)| (n.mul(m), x * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::one(&self.ctx);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Weighted degree of the highest-degree term (`None` for zero).
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// The common degree of all terms; zero counts as homogeneous of any
    /// degree and yields `Some(0)`.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(Monomial::degree);
        let Some(d) = it.next() else { return Some(0) };
        it.all(|e| e == d).then_some(d)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous_degree().is_some()
    }

    pub fn homogeneous_components(&self) -> Vec<Polynomial> {
        let mut parts: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            parts.entry(m.degree()).or_insert_with(|| Polynomial::zero(&self.ctx)).add_term(m.clone(), c.clone());
        }
        parts.into_values().collect()
    }

    pub fn uses_var(&self, var: usize) -> bool {
        self.terms.keys().any(|m| m.uses(var))
    }

    /// gcd of the coefficients (zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    pub fn leading_term(&self, order: &MonomialOrder) -> Result<(BigInt, Monomial), PolyError> {
        self.terms
            .iter()
            .max_by(|a, b| order.cmp(a.0, b.0))
            .map(|(m, c)| (c.clone(), m.clone()))
            .ok_or(PolyError::ZeroInput)
    }

    /// Terms sorted descending in `order`.
    pub fn sorted_terms(&self, order: &MonomialOrder) -> Vec<(Monomial, BigInt)> {
        let mut v: Vec<(Monomial, BigInt)> = self.terms.iter().map(|(m, c)| (m.clone(), c.clone())).collect();
        v.sort_by(|a, b| order.cmp(&b.0, &a.0));
        v
    }

    /// Multiplies by -1 if needed so the leading coefficient in the default
    /// order is positive.
    pub fn normalize_sign(&self) -> Polynomial {
        match self.leading_term(&MonomialOrder::grevlex(&self.ctx)) {
            Ok((c, _)) if c.is_negative() => -self,
            _ => self.clone(),
        }
    }

    /// Re-expresses the polynomial in `target`, matching variables by name.
    pub fn transfer(&self, target: &Ctx) -> Result<Polynomial, PolyError> {
        let map: Vec<Option<usize>> = self.ctx.vars().iter().map(|v| target.index_of(v)).collect();
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut exps = vec![0; target.nvars()];
            for (i, &e) in m.exps().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                match map[i] {
                    Some(j) => exps[j] = e,
                    None => return Err(PolyError::NotInTarget(self.ctx.var_name(i).to_string())),
                }
            }
            out.add_term(Monomial::new(exps, target.weights()), c.clone());
        }
        Ok(out)
    }

    /// Substitutes `images[i]` for the i-th variable. All images must share
    /// one context, which becomes the context of the result.
    pub fn substitute(&self, images: &[Polynomial], target: &Ctx) -> Polynomial {
        assert_eq!(images.len(), self.ctx.nvars(), "one image per variable");
        let mut powers: Vec<Vec<Polynomial>> = vec![vec![Polynomial::one(target)]; images.len()];
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut t = Polynomial::constant(target, c.clone());
            for (i, &e) in m.exps().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = &powers[i][powers[i].len() - 1] * &images[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][e as usize];
            }
            for (mm, cc) in t.terms {
                out.add_term(mm, cc);
            }
        }
        out
    }

    /// Exact division in `Z[vars]`; `None` if `divisor` does not divide.
    pub fn exact_div(&self, divisor: &Polynomial) -> Option<Polynomial> {
        if divisor.is_zero() {
            return None;
        }
        let order = MonomialOrder::grevlex(&self.ctx);
        let (dc, dm) = divisor.leading_term(&order).ok()?;
        let mut rem = self.clone();
        let mut quot = Polynomial::zero(&self.ctx);
        while !rem.is_zero() {
            let (rc, rm) = rem.leading_term(&order).ok()?;
            if !dm.divides(&rm) || !rc.is_multiple_of(&dc) {
                return None;
            }
            let qm = dm.cofactor_in(&rm);
            let qc = &rc / &dc;
            rem = &rem - &divisor.mul_monomial(&qm, &qc);
            quot.add_term(qm, qc);
        }
        Some(quot)
    }

    /// Canonical text: terms descending in the default order.
    pub fn to_text(&self) -> String {
        self.to_text_in(&MonomialOrder::grevlex(&self.ctx))
    }

    pub fn to_text_in(&self, order: &MonomialOrder) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (k, (m, c)) in self.sorted_terms(order).iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            if m.is_one() {
                s.push_str(&a.to_string());
            } else {
                if !a.is_one() {
                    s.push_str(&a.to_string());
                    s.push('*');
                }
                m.fmt_in(&self.ctx, &mut s).unwrap();
            }
        }
        s
    }

    pub fn parse(ctx: &Ctx, text: &str) -> Result<Polynomial, PolyError> {
        let expr = PolyExpr::parse(text)?;
        expr.eval(ctx)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl serde::Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial { ctx: self.ctx.clone(), terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

// ---------------------------------------------------------------------------
// Expressions

/// Source position (1-based).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

/// Unresolved polynomial expression; identifiers are bound to a context by
/// [`PolyExpr::eval`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolyExpr {
    Int(BigInt),
    Var(String, Pos),
    Add(Box<PolyExpr>, Box<PolyExpr>),
    Sub(Box<PolyExpr>, Box<PolyExpr>),
    Mul(Box<PolyExpr>, Box<PolyExpr>),
    Neg(Box<PolyExpr>),
    Pow(Box<PolyExpr>, u32),
}

impl PolyExpr {
    pub fn eval(&self, ctx: &Ctx) -> Result<Polynomial, PolyError> {
        Ok(match self {
            PolyExpr::Int(n) => Polynomial::constant(ctx, n.clone()),
            PolyExpr::Var(name, pos) => match ctx.index_of(name) {
                Some(i) => Polynomial::var(ctx, i),
                None => {
                    return Err(PolyError::UnknownVariable { name: name.clone(), line: pos.line, col: pos.col })
                }
            },
            PolyExpr::Add(a, b) => &a.eval(ctx)? + &b.eval(ctx)?,
            PolyExpr::Sub(a, b) => &a.eval(ctx)? - &b.eval(ctx)?,
            PolyExpr::Mul(a, b) => &a.eval(ctx)? * &b.eval(ctx)?,
            PolyExpr::Neg(a) => -a.eval(ctx)?,
            PolyExpr::Pow(a, e) => a.eval(ctx)?.pow(*e),
        })
    }

    /// Identifiers mentioned, in order of first appearance.
    pub fn identifiers(&self) -> Vec<(String, Pos)> {
        fn walk(e: &PolyExpr, out: &mut Vec<(String, Pos)>) {
            match e {
                PolyExpr::Int(_) => {}
                PolyExpr::Var(n, p) => {
                    if !out.iter().any(|(m, _)| m == n) {
                        out.push((n.clone(), *p));
                    }
                }
                PolyExpr::Add(a, b) | PolyExpr::Sub(a, b) | PolyExpr::Mul(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                PolyExpr::Neg(a) | PolyExpr::Pow(a, _) => walk(a, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    pub fn parse(text: &str) -> Result<PolyExpr, PolyError> {
        let toks = lex_expr(text)?;
        let mut p = ExprParser { toks: &toks, at: 0 };
        let e = p.expr()?;
        if p.at != toks.len() {
            return Err(PolyError::Parse { col: toks[p.at].1, msg: format!("unexpected `{}`", toks[p.at].0) });
        }
        Ok(e)
    }
}

impl PolyExpr {
    fn level(&self) -> u8 {
        match self {
            PolyExpr::Add(..) | PolyExpr::Sub(..) => 1,
            PolyExpr::Mul(..) => 2,
            PolyExpr::Neg(_) => 3,
            PolyExpr::Pow(..) => 4,
            PolyExpr::Int(_) | PolyExpr::Var(..) => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.level() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            PolyExpr::Int(n) => write!(f, "{n}"),
            PolyExpr::Var(v, _) => write!(f, "{v}"),
            PolyExpr::Add(a, b) | PolyExpr::Sub(a, b) => {
                a.write_at(f, 1)?;
                write!(f, "{}", if matches!(self, PolyExpr::Add(..)) { " + " } else { " - " })?;
                b.write_at(f, 2)
            }
            PolyExpr::Mul(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "*")?;
                b.write_at(f, 3)
            }
            PolyExpr::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 3)
            }
            PolyExpr::Pow(a, e) => {
                a.write_at(f, 5)?;
                write!(f, "^{e}")
            }
        }
    }
}

/// Prints with the minimal parentheses that reparse to the same tree.
impl fmt::Display for PolyExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum ETok {
    Int(BigInt),
    Ident(String),
    Sym(char),
}

impl fmt::Display for ETok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ETok::Int(n) => write!(f, "{n}"),
            ETok::Ident(s) => write!(f, "{s}"),
            ETok::Sym(c) => write!(f, "{c}"),
        }
    }
}

fn lex_expr(text: &str) -> Result<Vec<(ETok, usize)>, PolyError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push((ETok::Int(s.parse().unwrap()), col));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((ETok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*^()".contains(c) {
            out.push((ETok::Sym(c), col));
            i += 1;
        } else {
            return Err(PolyError::Parse { col, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: &'a [(ETok, usize)],
    at: usize,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&ETok> {
        self.toks.get(self.at).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.at).map_or_else(|| self.toks.last().map_or(1, |t| t.1 + 1), |t| t.1)
    }

    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse { col: self.col(), msg: msg.to_string() }
    }

    fn expr(&mut self) -> Result<PolyExpr, PolyError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(ETok::Sym('+')) => {
                    self.at += 1;
                    lhs = PolyExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(ETok::Sym('-')) => {
                    self.at += 1;
                    lhs = PolyExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<PolyExpr, PolyError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(ETok::Sym('*')) => {
                    self.at += 1;
                    lhs = PolyExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(ETok::Int(_)) | Some(ETok::Ident(_)) | Some(ETok::Sym('(')) => {
                    lhs = PolyExpr::Mul(Box::new(lhs), Box::new(self.power()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<PolyExpr, PolyError> {
        if let Some(ETok::Sym('-')) = self.peek() {
            self.at += 1;
            return Ok(PolyExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<PolyExpr, PolyError> {
        let base = self.atom()?;
        if let Some(ETok::Sym('^')) = self.peek() {
            self.at += 1;
            match self.peek().cloned() {
                Some(ETok::Int(n)) => {
                    self.at += 1;
                    let e = u32::try_from(&n).map_err(|_| self.err("exponent too large"))?;
                    return Ok(PolyExpr::Pow(Box::new(base), e));
                }
                _ => return Err(self.err("expected integer exponent")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<PolyExpr, PolyError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(ETok::Int(n)) => {
                self.at += 1;
                Ok(PolyExpr::Int(n))
            }
            Some(ETok::Ident(s)) => {
                self.at += 1;
                Ok(PolyExpr::Var(s, Pos { line: 1, col }))
            }
            Some(ETok::Sym('(')) => {
                self.at += 1;
                let e = self.expr()?;
                match self.peek() {
                    Some(ETok::Sym(')')) => {
                        self.at += 1;
                        Ok(e)
                    }
                    _ => Err(self.err("expected `)`")),
                }
            }
            _ => Err(self.err("expected integer, identifier or `(`")),
        }
    }
}
