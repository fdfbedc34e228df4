//! Homogeneous ideals of a free polynomial ring over the integers and the
//! ideal-level operations built on strong Gröbner bases.

use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::groebner::{strong_groebner, strong_groebner_truncated, GroebnerBasis};
use crate::poly::{Ctx, MonomialOrder, PolyError, Polynomial, VarContext};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdealError {
    #[error("generator `{poly}` is not homogeneous for the weights of `{ctx}`")]
    Inhomogeneous { poly: String, ctx: String },
    #[error("context mismatch: `{left}` vs `{right}`")]
    ContextMismatch { left: String, right: String },
    #[error("quotient by the zero polynomial")]
    ZeroDivisor,
    #[error("internal error: generator `{0}` of the intersection is not divisible")]
    DivisionFailed(String),
    #[error("unknown variable `{0}` in elimination set")]
    UnknownVariable(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Debug)]
pub struct Ideal {
    ctx: Ctx,
    gens: Vec<Polynomial>,
    gb: OnceLock<GroebnerBasis>,
    partial: Arc<Mutex<Option<GroebnerBasis>>>,
}

/// Why two ideals differ: a generator of one side with its nonzero normal
/// form modulo the other side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub generator: Polynomial,
    pub normal_form: Polynomial,
    /// `true` if the generator belongs to the left-hand ideal.
    pub from_left: bool,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} generator {} has normal form {}",
            if self.from_left { "left" } else { "right" },
            self.generator,
            self.normal_form
        )
    }
}

/// Annihilator of an element in a quotient ring.
#[derive(Clone, Debug)]
pub enum Annihilator {
    /// The element is zero in the ring, so everything annihilates it.
    Whole,
    /// Preimage in the free ring; it contains the relations.
    Ideal(Ideal),
}

fn check_same(a: &Ctx, b: &Ctx) -> Result<(), IdealError> {
    if Arc::ptr_eq(a, b) || a.compatible(b) {
        Ok(())
    } else {
        Err(IdealError::ContextMismatch { left: a.name().to_string(), right: b.name().to_string() })
    }
}

impl Ideal {
    /// Builds an ideal, rejecting inhomogeneous generators. Zero generators
    /// are dropped.
    pub fn new(ctx: &Ctx, gens: Vec<Polynomial>) -> Result<Ideal, IdealError> {
        for g in &gens {
            check_same(ctx, g.ctx())?;
            if !g.is_homogeneous() {
                return Err(IdealError::Inhomogeneous { poly: g.to_text(), ctx: ctx.name().to_string() });
            }
        }
        Ok(Self::unchecked(ctx, gens))
    }

    fn unchecked(ctx: &Ctx, gens: Vec<Polynomial>) -> Ideal {
        let gens = gens.into_iter().filter(|g| !g.is_zero()).collect();
        Ideal { ctx: ctx.clone(), gens, gb: OnceLock::new(), partial: Arc::default() }
    }

    pub fn zero(ctx: &Ctx) -> Ideal {
        Self::unchecked(ctx, Vec::new())
    }

    pub fn unit(ctx: &Ctx) -> Ideal {
        Self::unchecked(ctx, vec![Polynomial::one(ctx)])
    }

    pub fn principal(f: &Polynomial) -> Result<Ideal, IdealError> {
        Self::new(f.ctx(), vec![f.clone()])
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn gens(&self) -> &[Polynomial] {
        &self.gens
    }

    /// Cached auto-reduced strong basis for the default order.
    pub fn groebner(&self) -> &GroebnerBasis {
        self.gb.get_or_init(|| strong_groebner(&self.gens, &MonomialOrder::grevlex(&self.ctx)))
    }

    pub fn normal_form(&self, f: &Polynomial) -> Polynomial {
        self.groebner().normal_form(f)
    }

    /// Without a cached full basis, a basis truncated at `deg f` suffices
    /// because generators are homogeneous.
    pub fn contains(&self, f: &Polynomial) -> bool {
        if let Some(gb) = self.gb.get() {
            return gb.contains(f);
        }
        let comps = f.homogeneous_components();
        let Some(d) = comps.iter().filter_map(|c| c.homogeneous_degree()).max() else {
            return true;
        };
        let mut partial = self.partial.lock().unwrap_or_else(|e| e.into_inner());
        if partial.as_ref().and_then(|g| g.truncated_at()).is_none_or(|t| t < d) {
            let order = MonomialOrder::grevlex(&self.ctx);
            *partial = Some(strong_groebner_truncated(&self.gens, &order, d));
        }
        let gb = partial.as_ref().expect("just filled");
        comps.iter().all(|c| gb.contains(c))
    }

    pub fn is_zero_ideal(&self) -> bool {
        self.gens.is_empty()
    }

    /// Nonzero constant `c` in the ideal if there is one (`±1`: unit ideal).
    /// Over the integers `(2)` and `(1)` differ, so the constant matters.
    pub fn contains_constant(&self) -> Option<BigInt> {
        self.groebner().constant().map(|c| c.abs())
    }

    pub fn is_unit(&self) -> bool {
        self.contains_constant().is_some_and(|c| c.is_one())
    }

    pub fn sum(&self, other: &Ideal) -> Result<Ideal, IdealError> {
        check_same(&self.ctx, &other.ctx)?;
        let mut gens = self.gens.clone();
        gens.extend(other.gens.iter().map(|g| Polynomial::from_terms(&self.ctx, g.terms().map(|(m, c)| (m.clone(), c.clone())))));
        Ok(Self::unchecked(&self.ctx, gens))
    }

    pub fn with_generators(&self, extra: &[Polynomial]) -> Result<Ideal, IdealError> {
        self.sum(&Ideal::new(&self.ctx, extra.to_vec())?)
    }

    pub fn product(&self, other: &Ideal) -> Result<Ideal, IdealError> {
        check_same(&self.ctx, &other.ctx)?;
        let mut gens = Vec::new();
        for a in &self.gens {
            for b in &other.gens {
                gens.push(a * b);
            }
        }
        Ok(Self::unchecked(&self.ctx, gens))
    }

    /// First generator of `self` outside `other`, with its normal form.
    pub fn first_outside(&self, other: &Ideal) -> Option<(Polynomial, Polynomial)> {
        self.gens.iter().find_map(|g| {
            let nf = other.normal_form(g);
            (!nf.is_zero()).then(|| (g.clone(), nf))
        })
    }

    pub fn is_subset(&self, other: &Ideal) -> Result<bool, IdealError> {
        check_same(&self.ctx, &other.ctx)?;
        Ok(self.first_outside(other).is_none())
    }

    /// `Ok(())` if equal, otherwise a generator witnessing the difference.
    pub fn compare(&self, other: &Ideal) -> Result<Result<(), Counterexample>, IdealError> {
        check_same(&self.ctx, &other.ctx)?;
        if let Some((g, nf)) = self.first_outside(other) {
            return Ok(Err(Counterexample { generator: g, normal_form: nf, from_left: true }));
        }
        if let Some((g, nf)) = other.first_outside(self) {
            return Ok(Err(Counterexample { generator: g, normal_form: nf, from_left: false }));
        }
        Ok(Ok(()))
    }

    pub fn equal(&self, other: &Ideal) -> Result<bool, IdealError> {
        Ok(self.compare(other)?.is_ok())
    }

    /// `self ∩ (subring without the named variables)`, expressed in the
    /// context of the remaining variables.
    pub fn eliminate(&self, front: &[&str]) -> Result<Ideal, IdealError> {
        let mut idx = Vec::new();
        for name in front {
            idx.push(self.ctx.index_of(name).ok_or_else(|| IdealError::UnknownVariable(name.to_string()))?);
        }
        let rest: Vec<(String, u32)> = (0..self.ctx.nvars())
            .filter(|i| !idx.contains(i))
            .map(|i| (self.ctx.var_name(i).to_string(), self.ctx.weight(i)))
            .collect();
        let sub = VarContext::from_owned(format!("{}\\{{{}}}", self.ctx.name(), front.join(",")), rest)?;
        let kept = eliminate_indices(&self.ctx, &self.gens, &idx)?;
        let gens = kept.iter().map(|g| g.transfer(&sub)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::unchecked(&sub, gens))
    }

    /// Intersection via the auxiliary variable trick: eliminate `t` from
    /// `t*I + (1-t)*J`.
    pub fn intersect(&self, other: &Ideal) -> Result<Ideal, IdealError> {
        check_same(&self.ctx, &other.ctx)?;
        if self.is_zero_ideal() || other.is_zero_ideal() {
            return Ok(Ideal::zero(&self.ctx));
        }
        let tname = self.ctx.fresh_name("t");
        let big = self.ctx.prepend(format!("{}[{tname}]", self.ctx.name()), &[(tname, 1)])?;
        let t = Polynomial::var(&big, 0);
        let one_minus_t = &Polynomial::one(&big) - &t;
        let mut gens = Vec::new();
        for g in &self.gens {
            gens.push(&t * &g.transfer(&big)?);
        }
        for h in &other.gens {
            gens.push(&one_minus_t * &h.transfer(&big)?);
        }
        let kept = eliminate_indices(&big, &gens, &[0])?;
        let mut out = Vec::new();
        for g in kept {
            for part in g.transfer(&self.ctx)?.homogeneous_components() {
                out.push(part);
            }
        }
        Ok(Self::unchecked(&self.ctx, out))
    }

    /// `(self : f) = { g : g*f ∈ self }`.
    pub fn quotient(&self, f: &Polynomial) -> Result<Ideal, IdealError> {
        check_same(&self.ctx, f.ctx())?;
        if f.is_zero() {
            return Err(IdealError::ZeroDivisor);
        }
        if !f.is_homogeneous() {
            return Err(IdealError::Inhomogeneous { poly: f.to_text(), ctx: self.ctx.name().to_string() });
        }
        if f.as_constant().is_some_and(|c| c.abs().is_one()) {
            return Ok(self.clone());
        }
        let both = self.intersect(&Ideal::principal(f)?)?;
        let mut gens = Vec::new();
        for g in both.gens() {
            let q = g.exact_div(f).ok_or_else(|| IdealError::DivisionFailed(g.to_text()))?;
            gens.push(q.normalize_sign());
        }
        Ok(Self::unchecked(&self.ctx, gens))
    }

    /// Generators of the reduced basis, for compact display.
    pub fn minimal_generators(&self) -> Vec<Polynomial> {
        self.groebner().elements().to_vec()
    }

    pub fn to_text(&self) -> String {
        let parts: Vec<String> = self.gens.iter().map(|g| g.normalize_sign().to_text()).collect();
        format!("({})", parts.join(", "))
    }
}

impl fmt::Display for Ideal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Basis elements free of the variables `front`, from a strong basis in the
/// block order with `front` first.
fn eliminate_indices(ctx: &Ctx, gens: &[Polynomial], front: &[usize]) -> Result<Vec<Polynomial>, IdealError> {
    let order = MonomialOrder::block(ctx, front);
    let gb = strong_groebner(gens, &order);
    Ok(gb.elements().iter().filter(|g| !front.iter().any(|&i| g.uses_var(i))).cloned().collect())
}

/// Annihilator of `f` in `Z[vars]/relations`.
pub fn annihilator_in_quotient(relations: &Ideal, f: &Polynomial) -> Result<Annihilator, IdealError> {
    if relations.contains(f) {
        return Ok(Annihilator::Whole);
    }
    Ok(Annihilator::Ideal(relations.quotient(f)?))
}

/// Whether multiplication by `f` is injective on `Z[vars]/relations`.
pub fn is_nonzerodivisor(relations: &Ideal, f: &Polynomial) -> Result<bool, IdealError> {
    match annihilator_in_quotient(relations, f)? {
        Annihilator::Whole => Ok(false),
        Annihilator::Ideal(q) => q.equal(relations),
    }
}

/// Nonzero constant of the ideal generated by `gens`, if any.
pub fn constant_of(gens: &[Polynomial], ctx: &Ctx) -> Option<BigInt> {
    let gb = strong_groebner(gens, &MonomialOrder::grevlex(ctx));
    gb.constant().filter(|c| !c.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2() -> Ctx {
        VarContext::new("S3", &[("l1", 1), ("d23", 1)]).unwrap()
    }

    fn p(c: &Ctx, s: &str) -> Polynomial {
        Polynomial::parse(c, s).unwrap()
    }

    fn ideal(c: &Ctx, gens: &[&str]) -> Ideal {
        Ideal::new(c, gens.iter().map(|g| p(c, g)).collect()).unwrap()
    }

    #[test]
    fn sums_and_products() {
        let c = VarContext::new("S4", &[("l1", 1), ("d12", 1), ("d23", 1)]).unwrap();
        let s = ideal(&c, &["d23"]).sum(&ideal(&c, &["d12+l1"])).unwrap();
        assert!(s.equal(&ideal(&c, &["d23", "d12 + l1"])).unwrap());
        let i = ideal(&c, &["l1 d12"]);
        assert!(i.sum(&Ideal::zero(&c)).unwrap().equal(&i).unwrap());
        let pr = ideal(&c, &["l1"]).product(&ideal(&c, &["d23"])).unwrap();
        assert_eq!(pr.gens(), &[p(&c, "l1*d23")]);
    }

    #[test]
    fn intersections() {
        let c = c2();
        let i = ideal(&c, &["l1"]).intersect(&ideal(&c, &["d23"])).unwrap();
        assert!(i.equal(&ideal(&c, &["l1 d23"])).unwrap());
        let f = ideal(&c, &["d23(d23+l1)", "6l1(l1+d23)"]);
        assert!(f.intersect(&f).unwrap().equal(&f).unwrap());
        // kernels of the two restriction maps of the first patching step
        let kj = ideal(&c, &["d23", "6l1^2"]);
        let kp = ideal(&c, &["d23 + l1", "12 l1^2"]);
        let both = kj.intersect(&kp).unwrap();
        assert!(both.equal(&ideal(&c, &["d23(d23+l1)", "6l1(l1+d23)", "12l1 d23"])).unwrap());
    }

    #[test]
    fn quotients() {
        let c = VarContext::new("X23", &[("l1", 1)]).unwrap();
        let q = ideal(&c, &["12l1^2"]).quotient(&p(&c, "l1")).unwrap();
        assert!(q.equal(&ideal(&c, &["12 l1"])).unwrap());
        let i = ideal(&c, &["12l1^2"]);
        assert!(i.quotient(&p(&c, "1")).unwrap().equal(&i).unwrap());
        let c = VarContext::new("X3", &[("l1", 1), ("x", 1)]).unwrap();
        let q = ideal(&c, &["x^2"]).quotient(&p(&c, "l1 + x")).unwrap();
        assert!(q.equal(&ideal(&c, &["x^2"])).unwrap());
        assert!(matches!(i.quotient(&Polynomial::zero(i.ctx())), Err(IdealError::ZeroDivisor)));
    }

    #[test]
    fn nonzerodivisors() {
        let c = VarContext::new("L", &[("l1", 1)]).unwrap();
        assert!(is_nonzerodivisor(&Ideal::zero(&c), &p(&c, "l1")).unwrap());
        assert!(!is_nonzerodivisor(&ideal(&c, &["12 l1^2"]), &p(&c, "l1")).unwrap());
        let c = VarContext::new("X3", &[("l1", 1), ("x", 1)]).unwrap();
        assert!(is_nonzerodivisor(&ideal(&c, &["x^2"]), &p(&c, "l1 + x")).unwrap());
    }

    #[test]
    fn annihilators() {
        let c = VarContext::new("X23", &[("l1", 1)]).unwrap();
        match annihilator_in_quotient(&ideal(&c, &["12l1^2"]), &p(&c, "-l1")).unwrap() {
            Annihilator::Ideal(a) => assert!(a.equal(&ideal(&c, &["12 l1"])).unwrap()),
            Annihilator::Whole => panic!("expected a proper annihilator"),
        }
        match annihilator_in_quotient(&Ideal::zero(&c), &p(&c, "l1")).unwrap() {
            Annihilator::Ideal(a) => assert!(a.is_zero_ideal() || a.equal(&Ideal::zero(&c)).unwrap()),
            Annihilator::Whole => panic!(),
        }
        let c = VarContext::new("Xa1", &[("l1", 1), ("x", 1)]).unwrap();
        let rel = ideal(&c, &["2l1", "x(x+l1)"]);
        assert!(matches!(annihilator_in_quotient(&rel, &Polynomial::zero(&c)).unwrap(), Annihilator::Whole));
    }

    #[test]
    fn equality_over_integers() {
        let c = VarContext::new("x", &[("x", 1)]).unwrap();
        assert!(ideal(&c, &["2x", "3x"]).equal(&ideal(&c, &["x"])).unwrap());
        assert!(!ideal(&c, &["2x"]).equal(&ideal(&c, &["x"])).unwrap());
        let cex = ideal(&c, &["2x"]).compare(&ideal(&c, &["x"])).unwrap().unwrap_err();
        assert!(!cex.from_left);
        assert_eq!(cex.normal_form, p(&c, "x"));
    }

    #[test]
    fn elimination() {
        let c = VarContext::new("T", &[("t", 1), ("l1", 1), ("d23", 1)]).unwrap();
        // inhomogeneous on purpose: build through the internal constructor
        let gens = vec![p(&c, "t l1"), p(&c, "d23 - t d23")];
        let i = Ideal::unchecked(&c, gens);
        let e = i.eliminate(&["t"]).unwrap();
        let sub = e.ctx().clone();
        assert!(e.equal(&Ideal::new(&sub, vec![p(&sub, "l1 d23")]).unwrap()).unwrap());

        let c = VarContext::new("G", &[("x", 2), ("l1", 1)]).unwrap();
        let e = ideal(&c, &["x - l1^2"]).eliminate(&["x"]).unwrap();
        assert!(e.is_zero_ideal());
    }

    #[test]
    fn inhomogeneous_rejected() {
        let c = c2();
        let err = Ideal::new(&c, vec![p(&c, "l1^2 + d23")]).unwrap_err();
        assert!(matches!(err, IdealError::Inhomogeneous { .. }));
    }

    #[test]
    fn unit_versus_constant() {
        let c = c2();
        assert_eq!(ideal(&c, &["2", "l1"]).contains_constant(), Some(BigInt::from(2)));
        assert!(!ideal(&c, &["2"]).is_unit());
        assert!(ideal(&c, &["2", "3"]).is_unit());
        assert!(Ideal::unit(&c).is_unit());
        assert!(Ideal::zero(&c).contains_constant().is_none());
        let _ = BigInt::zero();
    }
}
