//! Strong Gröbner bases over the integers.
//!
//! Buchberger's algorithm adapted to a Euclidean coefficient ring: every
//! pair produces an S-polynomial (lcm of leading coefficients) and, when
//! neither leading coefficient divides the other, a G-polynomial (Bézout
//! combination reaching their gcd). Pairs are processed by ascending
//! weighted degree of the lcm monomial, ties broken by creation order.
//!
//! Reduction of a term `c*m` picks, among basis elements whose leading
//! monomial divides `m`, the first one whose leading coefficient divides
//! `c`; failing that, the first one of smallest leading coefficient, and
//! replaces `c` by its symmetric remainder. Against a strong basis the
//! resulting normal form is canonical.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::poly::{Monomial, MonomialOrder, Polynomial};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GbError {
    #[error("zero polynomial passed where a leading term is required")]
    ZeroInput,
    #[error(transparent)]
    Poly(#[from] crate::poly::PolyError),
}

type Terms = Vec<(Monomial, BigInt)>;

thread_local! {
    static TRACE: RefCell<Option<Box<dyn FnMut(&str)>>> = RefCell::new(None);
}

/// Runs `f` with every processed pair reported to `sink`, one line each.
pub fn with_trace<R>(sink: impl FnMut(&str) + 'static, f: impl FnOnce() -> R) -> R {
    let prev = TRACE.with(|t| t.borrow_mut().replace(Box::new(sink)));
    let out = f();
    TRACE.with(|t| *t.borrow_mut() = prev);
    out
}

fn trace_enabled() -> bool {
    TRACE.with(|t| t.borrow().is_some())
}

fn emit_trace(line: &str) {
    TRACE.with(|t| {
        if let Some(sink) = t.borrow_mut().as_mut() {
            sink(line);
        }
    });
}

fn sorted(p: &Polynomial, order: &MonomialOrder) -> Terms {
    p.sorted_terms(order)
}

fn to_poly(t: Terms, like: &MonomialOrder) -> Polynomial {
    Polynomial::from_terms(like.ctx(), t)
}

/// `a - q * m * g`, all inputs sorted descending.
fn sub_mul(a: &[(Monomial, BigInt)], q: &BigInt, m: &Monomial, g: &[(Monomial, BigInt)], order: &MonomialOrder) -> Terms {
    let mut out = Vec::with_capacity(a.len() + g.len());
    let mut i = 0;
    let mut j = 0;
    let mut gj: Option<Monomial> = g.first().map(|t| t.0.mul(m));
    while i < a.len() || j < g.len() {
        let ord = match (i < a.len(), &gj) {
            (true, Some(gm)) => order.cmp(&a[i].0, gm),
            (true, None) => std::cmp::Ordering::Greater,
            (false, _) => std::cmp::Ordering::Less,
        };
        match ord {
            std::cmp::Ordering::Greater => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Less => {
                out.push((gj.take().unwrap(), -(q * &g[j].1)));
                j += 1;
                gj = g.get(j).map(|t| t.0.mul(m));
            }
            std::cmp::Ordering::Equal => {
                let c = &a[i].1 - q * &g[j].1;
                let mono = gj.take().unwrap();
                if !c.is_zero() {
                    out.push((mono, c));
                }
                i += 1;
                j += 1;
                gj = g.get(j).map(|t| t.0.mul(m));
            }
        }
    }
    out
}

fn mul_term(g: &[(Monomial, BigInt)], c: &BigInt, m: &Monomial) -> Terms {
    g.iter().map(|(n, x)| (n.mul(m), x * c)).collect()
}

fn add_terms(a: Terms, b: Terms, order: &MonomialOrder) -> Terms {
    let one = Monomial::one(a.first().or(b.first()).map_or(0, |t| t.0.exps().len()));
    sub_mul(&a, &BigInt::from(-1), &one, &b, order)
}

/// Symmetric remainder: `c = q*b + r` with `-|b|/2 < r <= |b|/2`; returns `q`.
fn symmetric_quotient(c: &BigInt, b: &BigInt) -> BigInt {
    let babs = b.abs();
    let mut r = c.mod_floor(&babs);
    if &r * 2 > babs {
        r -= &babs;
    }
    (c - r) / b
}

/// Full normal form of `f` against `basis`.
fn reduce(f: Terms, basis: &[Terms], order: &MonomialOrder) -> Terms {
    reduce_masked(f, basis, None, order)
}

/// As `reduce`, skipping elements whose `alive` flag is unset.
fn reduce_masked(f: Terms, basis: &[Terms], alive: Option<&[bool]>, order: &MonomialOrder) -> Terms {
    let mut rest = f;
    let mut out: Terms = Vec::new();
    while !rest.is_empty() {
        let (m, c) = rest[0].clone();
        let mut exact: Option<usize> = None;
        let mut smallest: Option<usize> = None;
        for (k, g) in basis.iter().enumerate() {
            let (gm, gc) = &g[0];
            if !gm.divides(&m) || alive.is_some_and(|a| !a[k]) {
                continue;
            }
            if c.is_multiple_of(gc) {
                exact = Some(k);
                break;
            }
            if smallest.is_none_or(|s| gc.abs() < basis[s][0].1.abs()) {
                smallest = Some(k);
            }
        }
        if let Some(k) = exact {
            let g = &basis[k];
            let q = &c / &g[0].1;
            rest = sub_mul(&rest, &q, &g[0].0.cofactor_in(&m), g, order);
            continue;
        }
        if let Some(k) = smallest {
            let g = &basis[k];
            let q = symmetric_quotient(&c, &g[0].1);
            if !q.is_zero() {
                rest = sub_mul(&rest, &q, &g[0].0.cofactor_in(&m), g, order);
            }
        }
        // head is now irreducible
        let head = rest.remove(0);
        out.push(head);
    }
    out
}

fn s_poly_terms(f: &[(Monomial, BigInt)], g: &[(Monomial, BigInt)], order: &MonomialOrder) -> Terms {
    let (fm, fc) = &f[0];
    let (gm, gc) = &g[0];
    let w = order.ctx().weights();
    let m = fm.lcm(gm, w);
    let l = fc.lcm(gc);
    let a = mul_term(f, &(&l / fc), &fm.cofactor_in(&m));
    sub_mul(&a, &(&l / gc), &gm.cofactor_in(&m), g, order)
}

fn g_poly_terms(f: &[(Monomial, BigInt)], g: &[(Monomial, BigInt)], order: &MonomialOrder) -> Terms {
    let (fm, fc) = &f[0];
    let (gm, gc) = &g[0];
    let w = order.ctx().weights();
    let m = fm.lcm(gm, w);
    let e = fc.abs().extended_gcd(&gc.abs());
    let s = if fc.is_negative() { -e.x } else { e.x };
    let t = if gc.is_negative() { -e.y } else { e.y };
    let a = mul_term(f, &s, &fm.cofactor_in(&m));
    let b = mul_term(g, &t, &gm.cofactor_in(&m));
    add_terms(a, b, order)
}

fn leading_nonzero(p: &Polynomial, order: &MonomialOrder) -> Result<Terms, GbError> {
    if p.is_zero() {
        return Err(GbError::ZeroInput);
    }
    Ok(sorted(p, order))
}

/// S-polynomial: cancels leading terms using the lcm of the leading
/// monomials and of the leading coefficients.
pub fn s_polynomial(f: &Polynomial, g: &Polynomial, order: &MonomialOrder) -> Result<Polynomial, GbError> {
    f.try_sub(g)?;
    let (ft, gt) = (leading_nonzero(f, order)?, leading_nonzero(g, order)?);
    Ok(to_poly(s_poly_terms(&ft, &gt, order), order))
}

/// G-polynomial: Bézout combination whose leading term is
/// `gcd(lc f, lc g) * lcm(lm f, lm g)`.
pub fn g_polynomial(f: &Polynomial, g: &Polynomial, order: &MonomialOrder) -> Result<Polynomial, GbError> {
    f.try_sub(g)?;
    let (ft, gt) = (leading_nonzero(f, order)?, leading_nonzero(g, order)?);
    Ok(to_poly(g_poly_terms(&ft, &gt, order), order))
}

#[derive(Clone, Debug)]
pub struct GroebnerBasis {
    order: MonomialOrder,
    elements: Vec<Polynomial>,
    sorted: Vec<Terms>,
    reduced: bool,
    /// `Some(d)`: only pairs of degree at most `d` were processed.
    truncated_at: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum PairKind {
    S,
    G,
}

impl GroebnerBasis {
    pub fn order(&self) -> &MonomialOrder {
        &self.order
    }

    pub fn truncated_at(&self) -> Option<u32> {
        self.truncated_at
    }

    pub fn elements(&self) -> &[Polynomial] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn leading_terms(&self) -> Vec<(BigInt, Monomial)> {
        self.sorted.iter().map(|t| (t[0].1.clone(), t[0].0.clone())).collect()
    }

    pub fn normal_form(&self, f: &Polynomial) -> Polynomial {
        to_poly(reduce(sorted(f, &self.order), &self.sorted, &self.order), &self.order)
    }

    pub fn contains(&self, f: &Polynomial) -> bool {
        self.normal_form(f).is_zero()
    }

    /// A nonzero constant in the basis, if any. `±1` means the unit ideal.
    pub fn constant(&self) -> Option<BigInt> {
        self.elements.iter().find_map(|p| p.as_constant().filter(|c| !c.is_zero()))
    }

    /// Checks that every S- and G-polynomial of the basis reduces to zero.
    /// Returns the first offending pair and its nonzero remainder.
    pub fn check_criterion(&self) -> Result<(), (usize, usize, Polynomial)> {
        for j in 0..self.sorted.len() {
            for i in 0..j {
                let (f, g) = (&self.sorted[i], &self.sorted[j]);
                for t in [s_poly_terms(f, g, &self.order), g_poly_terms(f, g, &self.order)] {
                    let r = reduce(t, &self.sorted, &self.order);
                    if !r.is_empty() {
                        return Err((i, j, to_poly(r, &self.order)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Auto-reduced strong Gröbner basis of the ideal generated by `gens`.
pub fn strong_groebner(gens: &[Polynomial], order: &MonomialOrder) -> GroebnerBasis {
    buchberger(gens, order, None)
}

/// Stops before the first pair of degree above `d`. For homogeneous
/// generators the result decides membership exactly in degrees `<= d`.
pub fn strong_groebner_truncated(gens: &[Polynomial], order: &MonomialOrder, d: u32) -> GroebnerBasis {
    buchberger(gens, order, Some(d))
}

fn buchberger(gens: &[Polynomial], order: &MonomialOrder, cap: Option<u32>) -> GroebnerBasis {
    let tracing = trace_enabled();
    let mut st = State {
        order,
        basis: Vec::new(),
        alive: Vec::new(),
        queue: BTreeMap::new(),
        done: HashSet::new(),
        seq: 0,
    };
    for g in gens {
        st.add(sorted(g, order));
    }
    while let Some((key, (i, j, kind))) = st.queue.pop_first() {
        if cap.is_some_and(|d| key.0 > d) {
            break;
        }
        if !(st.alive[i] && st.alive[j]) {
            continue;
        }
        if kind == PairKind::S {
            let chained = chain_criterion(&st.basis, &st.alive, i, j, &st.done, order.ctx().weights());
            st.done.insert((i, j));
            if let Some(k) = chained {
                if tracing {
                    emit_trace(&format!("pair kind=S i={i} j={j} deg={} seq={} result=chain k={k}", key.0, key.1));
                }
                continue;
            }
        }
        let t = match kind {
            PairKind::S => s_poly_terms(&st.basis[i], &st.basis[j], order),
            PairKind::G => g_poly_terms(&st.basis[i], &st.basis[j], order),
        };
        let h = reduce_masked(t, &st.basis, Some(&st.alive), order);
        if tracing {
            let outcome = if h.is_empty() {
                "zero".to_string()
            } else {
                format!("new#{} lt={}", st.basis.len(), to_poly(vec![h[0].clone()], order).to_text())
            };
            emit_trace(&format!("pair kind={kind:?} i={i} j={j} deg={} seq={} result={outcome}", key.0, key.1));
        }
        st.add(h);
    }
    let State { basis, alive, .. } = st;
    let basis: Vec<Terms> = basis.into_iter().zip(alive).filter_map(|(g, a)| a.then_some(g)).collect();
    let sorted = interreduce(basis, order);
    let elements = sorted.iter().map(|t| to_poly(t.clone(), order)).collect();
    GroebnerBasis { order: order.clone(), elements, sorted, reduced: true, truncated_at: cap }
}

type Queue = BTreeMap<(u32, usize), (usize, usize, PairKind)>;

struct State<'a> {
    order: &'a MonomialOrder,
    basis: Vec<Terms>,
    /// Retired elements were replaced by their remainder modulo a newer
    /// element whose leading term strongly divides theirs.
    alive: Vec<bool>,
    /// (lcm degree, creation index) -> pair
    queue: Queue,
    /// S-pairs already reduced or discarded by a criterion
    done: HashSet<(usize, usize)>,
    seq: usize,
}

impl State<'_> {
    fn add(&mut self, h: Terms) {
        let mut pending = vec![h];
        while let Some(h) = pending.pop() {
            let h = reduce_masked(h, &self.basis, Some(&self.alive), self.order);
            if h.is_empty() {
                continue;
            }
            let h = if h[0].1.is_negative() { h.into_iter().map(|(m, c)| (m, -c)).collect() } else { h };
            let w = self.order.ctx().weights();
            let k = self.basis.len();
            for (i, g) in self.basis.iter().enumerate() {
                if !self.alive[i] {
                    continue;
                }
                let (gm, gc) = &g[0];
                let (hm, hc) = &h[0];
                let deg = gm.lcm(hm, w).degree();
                if gm.coprime(hm) && gc.gcd(hc).is_one() {
                    self.done.insert((i, k));
                } else {
                    self.queue.insert((deg, self.seq), (i, k, PairKind::S));
                    self.seq += 1;
                }
                if !gc.is_multiple_of(hc) && !hc.is_multiple_of(gc) {
                    self.queue.insert((deg, self.seq), (i, k, PairKind::G));
                    self.seq += 1;
                }
            }
            let retire: Vec<usize> =
                (0..k).filter(|&i| self.alive[i] && strongly_divides(&h[0], &self.basis[i][0])).collect();
            for &i in &retire {
                if trace_enabled() {
                    let deg = self.basis[i][0].0.degree();
                    emit_trace(&format!("pair kind=S i={i} j={k} deg={deg} seq=- result=retire#{i}"));
                }
                self.alive[i] = false;
                pending.push(s_poly_terms(&self.basis[i], &h, self.order));
            }
            let lm = h[0].0.clone();
            self.basis.push(h);
            self.alive.push(true);
            self.reduce_tails(k, &lm);
        }
    }
}

impl State<'_> {
    /// Tail-reduces live elements that the new element `k` acts on, which
    /// keeps coefficients from compounding across generations.
    fn reduce_tails(&mut self, k: usize, lm: &Monomial) {
        for i in 0..k {
            if !self.alive[i] || !self.basis[i][1..].iter().any(|(m, _)| lm.divides(m)) {
                continue;
            }
            let tail = self.basis[i][1..].to_vec();
            let tail = reduce_masked(tail, &self.basis, Some(&self.alive), self.order);
            self.basis[i].truncate(1);
            self.basis[i].extend(tail);
        }
    }
}

/// Buchberger's second criterion over a Euclidean domain: the S-pair
/// `(i, j)` is redundant when some `lt(g_k)` strongly divides the lcm term
/// and both `(i, k)` and `(k, j)` were handled earlier.
fn chain_criterion(
    basis: &[Terms],
    alive: &[bool],
    i: usize,
    j: usize,
    done: &HashSet<(usize, usize)>,
    w: &[u32],
) -> Option<usize> {
    let (im, ic) = &basis[i][0];
    let (jm, jc) = &basis[j][0];
    let lcm = (im.lcm(jm, w), ic.lcm(jc));
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    (0..basis.len()).find(|&k| {
        alive[k] && k != i && k != j && strongly_divides(&basis[k][0], &lcm) && done.contains(&key(i, k)) && done.contains(&key(j, k))
    })
}

fn strongly_divides(a: &(Monomial, BigInt), b: &(Monomial, BigInt)) -> bool {
    a.0.divides(&b.0) && b.1.is_multiple_of(&a.1)
}

fn interreduce(basis: Vec<Terms>, order: &MonomialOrder) -> Vec<Terms> {
    let mut keep: Vec<Terms> = Vec::new();
    for (k, g) in basis.iter().enumerate() {
        let redundant = basis.iter().enumerate().any(|(i, h)| {
            i != k && strongly_divides(&h[0], &g[0]) && !(strongly_divides(&g[0], &h[0]) && k < i)
        });
        if !redundant {
            keep.push(g.clone());
        }
    }
    let mut out: Vec<Terms> = Vec::with_capacity(keep.len());
    for k in 0..keep.len() {
        let head = keep[k][0].clone();
        let tail = reduce(keep[k][1..].to_vec(), &keep, order);
        let mut g = vec![head];
        g.extend(tail);
        out.push(g);
    }
    out.sort_by(|a, b| order.cmp(&a[0].0, &b[0].0).then_with(|| a[0].1.cmp(&b[0].1)));
    out
}

/// Ideal membership via a strong basis.
pub fn contains(gens: &[Polynomial], f: &Polynomial, order: &MonomialOrder) -> bool {
    strong_groebner(gens, order).contains(f)
}

pub fn normal_form(f: &Polynomial, gb: &GroebnerBasis) -> Polynomial {
    gb.normal_form(f)
}
