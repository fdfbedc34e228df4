//! Finitely presented graded rings over the integers and the maps between
//! them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::ideals::{annihilator_in_quotient, is_nonzerodivisor, Annihilator, Ideal, IdealError};
use crate::poly::{monomials_of_degree, Ctx, Monomial, PolyError, Polynomial, VarContext};
use crate::zla::{cokernel_structure, AbelianGroupStructure, IntMatrix};

pub const DEFAULT_MAX_DEGREE: u32 = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error(
        "relation `{relation}` of ring `{ring}` is inhomogeneous: `{term_a}` has degree {deg_a}, `{term_b}` has degree {deg_b}"
    )]
    InhomogeneousRelation { ring: String, relation: String, term_a: String, deg_a: u32, term_b: String, deg_b: u32 },
    #[error("map needs {expected} images, got {got}")]
    ImageCount { expected: usize, got: usize },
    #[error("image `{image}` of generator `{generator}` has degree {got}, expected {expected}")]
    DegreeMismatch { generator: String, image: String, expected: u32, got: String },
    #[error("relation not preserved: `{relation}` maps to normal form `{normal_form}`")]
    RelationNotPreserved { relation: String, normal_form: String },
    #[error("degree {degree} exceeds the configured maximum {max}")]
    DegreeTooLarge { degree: u32, max: u32 },
    #[error("unknown ring generator `{0}`")]
    UnknownGenerator(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
}

#[derive(Clone, Debug)]
pub struct PresentedRing {
    name: String,
    ctx: Ctx,
    relations: Ideal,
}

fn inhomogeneity(ring: &str, f: &Polynomial) -> Option<RingError> {
    let ctx = f.ctx();
    let mut terms = f.terms();
    let (m0, _) = terms.next()?;
    let (m1, _) = terms.find(|(m, _)| m.degree() != m0.degree())?;
    Some(RingError::InhomogeneousRelation {
        ring: ring.to_string(),
        relation: f.to_text(),
        term_a: m0.display(ctx),
        deg_a: m0.degree(),
        term_b: m1.display(ctx),
        deg_b: m1.degree(),
    })
}

impl PresentedRing {
    pub fn new(name: impl Into<String>, ctx: &Ctx, relations: Vec<Polynomial>) -> Result<Self, RingError> {
        let name = name.into();
        for r in &relations {
            if let Some(e) = inhomogeneity(&name, r) {
                return Err(e);
            }
        }
        let relations = Ideal::new(ctx, relations)?;
        Ok(PresentedRing { name, ctx: ctx.clone(), relations })
    }

    pub fn free(name: impl Into<String>, ctx: &Ctx) -> Self {
        PresentedRing { name: name.into(), ctx: ctx.clone(), relations: Ideal::zero(ctx) }
    }

    pub fn from_ideal(name: impl Into<String>, relations: Ideal) -> Self {
        PresentedRing { name: name.into(), ctx: relations.ctx().clone(), relations }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn relations(&self) -> &Ideal {
        &self.relations
    }

    pub fn generator(&self, name: &str) -> Result<Polynomial, RingError> {
        Polynomial::var_named(&self.ctx, name).map_err(|_| RingError::UnknownGenerator(name.to_string()))
    }

    pub fn parse(&self, text: &str) -> Result<Polynomial, RingError> {
        Ok(Polynomial::parse(&self.ctx, text)?)
    }

    pub fn normal_form(&self, f: &Polynomial) -> Polynomial {
        self.relations.normal_form(f)
    }

    pub fn is_zero(&self, f: &Polynomial) -> bool {
        self.relations.contains(f)
    }

    pub fn annihilator(&self, f: &Polynomial) -> Result<Annihilator, RingError> {
        Ok(annihilator_in_quotient(&self.relations, f)?)
    }

    pub fn is_nonzerodivisor(&self, f: &Polynomial) -> Result<bool, RingError> {
        Ok(is_nonzerodivisor(&self.relations, f)?)
    }

    /// Same generators, extra relations.
    pub fn quotient_by(&self, name: impl Into<String>, extra: &[Polynomial]) -> Result<PresentedRing, RingError> {
        let mut rels = self.relations.gens().to_vec();
        rels.extend(extra.iter().cloned());
        PresentedRing::new(name, &self.ctx, rels)
    }

    pub fn generator_degree(&self, i: usize) -> u32 {
        self.ctx.weight(i)
    }
}

impl fmt::Display for PresentedRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = Z[{}]", self.name, self.ctx.vars().join(", "))?;
        if !self.relations.is_zero_ideal() {
            write!(f, "/{}", self.relations)?;
        }
        Ok(())
    }
}

pub fn make_ring(name: &str, gens: &[(&str, u32)], relations: &[&str]) -> Result<PresentedRing, RingError> {
    let ctx = VarContext::new(name, gens)?;
    let rels = relations.iter().map(|r| Polynomial::parse(&ctx, r)).collect::<Result<Vec<_>, _>>()?;
    PresentedRing::new(name, &ctx, rels)
}

#[derive(Clone, Debug)]
pub struct RingMap {
    source: Arc<PresentedRing>,
    target: Arc<PresentedRing>,
    images: Vec<Polynomial>,
    certificate: Vec<(Polynomial, Polynomial)>,
}

/// Builds a degree-preserving map, checking that every source relation
/// lands in the target relations.
pub fn make_map(
    source: &Arc<PresentedRing>,
    target: &Arc<PresentedRing>,
    images: Vec<Polynomial>,
) -> Result<RingMap, RingError> {
    let sctx = source.ctx();
    if images.len() != sctx.nvars() {
        return Err(RingError::ImageCount { expected: sctx.nvars(), got: images.len() });
    }
    let images = images.iter().map(|im| im.transfer(target.ctx())).collect::<Result<Vec<_>, _>>()?;
    for (i, im) in images.iter().enumerate() {
        if im.is_zero() {
            continue;
        }
        let expected = sctx.weight(i);
        if im.homogeneous_degree() != Some(expected) {
            let got = match im.homogeneous_degree() {
                Some(d) => d.to_string(),
                None => "mixed".to_string(),
            };
            return Err(RingError::DegreeMismatch {
                generator: sctx.var_name(i).to_string(),
                image: im.to_text(),
                expected,
                got,
            });
        }
    }
    let mut certificate = Vec::new();
    for r in source.relations().gens() {
        let nf = target.normal_form(&r.substitute(&images, target.ctx()));
        if !nf.is_zero() {
            return Err(RingError::RelationNotPreserved { relation: r.to_text(), normal_form: nf.to_text() });
        }
        certificate.push((r.clone(), nf));
    }
    Ok(RingMap { source: source.clone(), target: target.clone(), images, certificate })
}

impl RingMap {
    pub fn identity(ring: &Arc<PresentedRing>) -> RingMap {
        let images = (0..ring.ctx().nvars()).map(|i| Polynomial::var(ring.ctx(), i)).collect();
        make_map(ring, ring, images).expect("identity is well defined")
    }

    pub fn source(&self) -> &Arc<PresentedRing> {
        &self.source
    }

    pub fn target(&self) -> &Arc<PresentedRing> {
        &self.target
    }

    pub fn images(&self) -> &[Polynomial] {
        &self.images
    }

    /// Source relations paired with the normal forms of their images.
    pub fn certificate(&self) -> &[(Polynomial, Polynomial)] {
        &self.certificate
    }

    /// Re-runs the well-definedness check.
    pub fn recheck(&self) -> bool {
        self.source
            .relations()
            .gens()
            .iter()
            .all(|r| self.target.is_zero(&r.substitute(&self.images, self.target.ctx())))
    }

    /// Image of a source polynomial, not reduced.
    pub fn apply(&self, f: &Polynomial) -> Polynomial {
        f.substitute(&self.images, self.target.ctx())
    }

    pub fn apply_reduced(&self, f: &Polynomial) -> Polynomial {
        self.target.normal_form(&self.apply(f))
    }

    pub fn compose(&self, after: &RingMap) -> Result<RingMap, RingError> {
        let images = self.images.iter().map(|im| after.apply(im)).collect();
        make_map(&self.source, &after.target, images)
    }
}

/// Full preimage of the target relations, as an ideal of the source free
/// ring. Target variables are renamed apart, then eliminated.
pub fn hom_kernel(m: &RingMap) -> Result<Ideal, RingError> {
    let sctx = m.source.ctx();
    let tctx = m.target.ctx();
    let renamed: Vec<(String, u32)> = (0..tctx.nvars())
        .map(|i| (sctx.fresh_name(&format!("{}'", tctx.var_name(i))), tctx.weight(i)))
        .collect();
    let k = renamed.len();
    let front: Vec<String> = renamed.iter().map(|(n, _)| n.clone()).collect();
    let big = sctx.prepend(format!("{}->{}", sctx.name(), tctx.name()), &renamed)?;
    let tvars: Vec<Polynomial> = (0..k).map(|i| Polynomial::var(&big, i)).collect();
    let svars: Vec<Polynomial> = (0..sctx.nvars()).map(|i| Polynomial::var(&big, k + i)).collect();
    let mut gens = Vec::new();
    for r in m.target.relations().gens() {
        gens.push(r.substitute(&tvars, &big));
    }
    for r in m.source.relations().gens() {
        gens.push(r.substitute(&svars, &big));
    }
    for (i, im) in m.images.iter().enumerate() {
        gens.push(&svars[i] - &im.substitute(&tvars, &big));
    }
    let all = Ideal::new(&big, gens)?;
    let names: Vec<&str> = front.iter().map(|s| s.as_str()).collect();
    let elim = all.eliminate(&names)?;
    let back = elim.gens().iter().map(|g| g.transfer(sctx)).collect::<Result<Vec<_>, _>>()?;
    Ok(Ideal::new(sctx, back)?)
}

/// Explicit preimages for the generators of a map's target.
#[derive(Clone, Debug, Default)]
pub struct SurjectivityWitness {
    pub preimages: Vec<(String, Polynomial)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SurjectivityFailure {
    #[error("no witness for generator `{0}`")]
    Missing(String),
    #[error("witness `{witness}` for `{generator}` misses by `{residue}`")]
    Wrong { generator: String, witness: String, residue: String },
    #[error("witness for unknown generator `{0}`")]
    Unknown(String),
}

/// `Ok` iff every target generator has a witness mapping onto it.
pub fn verify_surjective(m: &RingMap, w: &SurjectivityWitness) -> Result<(), SurjectivityFailure> {
    let tctx = m.target.ctx();
    for (g, _) in &w.preimages {
        if tctx.index_of(g).is_none() {
            return Err(SurjectivityFailure::Unknown(g.clone()));
        }
    }
    for i in 0..tctx.nvars() {
        let name = tctx.var_name(i);
        let Some((_, pre)) = w.preimages.iter().find(|(g, _)| g == name) else {
            return Err(SurjectivityFailure::Missing(name.to_string()));
        };
        let diff = &m.apply(pre) - &Polynomial::var(tctx, i);
        let residue = m.target.normal_form(&diff);
        if !residue.is_zero() {
            return Err(SurjectivityFailure::Wrong {
                generator: name.to_string(),
                witness: pre.to_text(),
                residue: residue.to_text(),
            });
        }
    }
    Ok(())
}

/// Degree-`d` piece of a presented ring.
#[derive(Clone, Debug)]
pub struct GradedPiece {
    pub degree: u32,
    pub basis: Vec<Monomial>,
    pub relations: IntMatrix,
    pub structure: AbelianGroupStructure,
}

/// Coefficients of `f` against `basis`; terms outside the basis are ignored.
pub fn coefficients(f: &Polynomial, basis: &[Monomial]) -> Vec<BigInt> {
    let index: BTreeMap<&Monomial, usize> = basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut v = vec![BigInt::zero(); basis.len()];
    for (m, c) in f.terms() {
        if let Some(&i) = index.get(m) {
            v[i] = c.clone();
        }
    }
    v
}

/// Rows `m*g` of degree `d` for relation generators `g`.
pub fn relation_rows(ctx: &Ctx, relations: &[Polynomial], d: u32, basis: &[Monomial]) -> Vec<Vec<BigInt>> {
    let mut rows = Vec::new();
    for g in relations {
        let Some(e) = g.homogeneous_degree() else { continue };
        if e > d {
            continue;
        }
        for m in monomials_of_degree(ctx, d - e) {
            let row = coefficients(&g.mul_monomial(&m, &BigInt::from(1)), basis);
            if row.iter().any(|x| !x.is_zero()) {
                rows.push(row);
            }
        }
    }
    rows
}

pub fn graded_piece(r: &PresentedRing, d: u32) -> Result<GradedPiece, RingError> {
    graded_piece_bounded(r, d, DEFAULT_MAX_DEGREE)
}

pub fn graded_piece_bounded(r: &PresentedRing, d: u32, max: u32) -> Result<GradedPiece, RingError> {
    if d > max {
        return Err(RingError::DegreeTooLarge { degree: d, max });
    }
    let basis = monomials_of_degree(r.ctx(), d);
    let rows = relation_rows(r.ctx(), r.relations().gens(), d, &basis);
    let relations = IntMatrix::from_rows(rows, basis.len());
    let structure = if relations.rows() == 0 {
        AbelianGroupStructure::free(basis.len())
    } else {
        cokernel_structure(&relations)
    };
    Ok(GradedPiece { degree: d, basis, relations, structure })
}

/// Rows are images of the source degree-`d` monomials in target monomial
/// coordinates, to be read modulo the target relation rows.
pub fn graded_map_matrix(m: &RingMap, d: u32) -> IntMatrix {
    let src = monomials_of_degree(m.source.ctx(), d);
    let tgt = monomials_of_degree(m.target.ctx(), d);
    let rows = src
        .iter()
        .map(|mono| {
            let f = Polynomial::monomial(m.source.ctx(), mono.clone(), 1);
            coefficients(&m.apply(&f), &tgt)
        })
        .collect();
    IntMatrix::from_rows(rows, tgt.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(r: PresentedRing) -> Arc<PresentedRing> {
        Arc::new(r)
    }

    fn polys(ctx: &Ctx, s: &[&str]) -> Vec<Polynomial> {
        s.iter().map(|x| Polynomial::parse(ctx, x).unwrap()).collect()
    }

    fn ideal(ctx: &Ctx, s: &[&str]) -> Ideal {
        Ideal::new(ctx, polys(ctx, s)).unwrap()
    }

    #[test]
    fn make_ring_examples() {
        let r = make_ring("Xa1", &[("l1", 1), ("x", 1)], &["2l1", "x(x+l1)"]).unwrap();
        assert_eq!(r.to_string(), "Xa1 = Z[l1, x]/(2*l1, l1*x + x^2)");
        let err = make_ring("bad", &[("l1", 1), ("x", 2)], &["x + l1"]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`x` has degree 2") && msg.contains("`l1` has degree 1"), "{msg}");
        let free = make_ring("F", &[("l1", 1), ("d12", 1), ("d13", 1), ("d23", 1), ("d3", 1)], &[]).unwrap();
        assert!(free.relations().is_zero_ideal());
    }

    #[test]
    fn maps_and_certificates() {
        let s = arc(make_ring("S", &[("l1", 1), ("d23", 1)], &[]).unwrap());
        let u = arc(make_ring("U", &[("l1", 1)], &["6l1^2"]).unwrap());
        let j = make_map(&s, &u, polys(u.ctx(), &["l1", "0"])).unwrap();
        assert!(j.recheck());
        assert_eq!(graded_map_matrix(&j, 1), IntMatrix::from_i64(&[&[1], &[0]]));
        let z = arc(make_ring("Z", &[("l1", 1)], &["12l1^2"]).unwrap());
        let p = make_map(&s, &z, polys(z.ctx(), &["l1", "-l1"])).unwrap();
        assert_eq!(graded_map_matrix(&p, 1), IntMatrix::from_i64(&[&[1], &[-1]]));

        // Z[l]/(12l^2) -> Z[l]/(6l^2) is fine, the reverse is not
        assert!(make_map(&z, &u, polys(u.ctx(), &["l1"])).is_ok());
        let err = make_map(&u, &z, polys(z.ctx(), &["l1"])).unwrap_err();
        assert_eq!(
            err,
            RingError::RelationNotPreserved { relation: "6*l1^2".into(), normal_form: "6*l1^2".into() }
        );
        let err = make_map(&s, &u, polys(u.ctx(), &["l1", "l1^2"])).unwrap_err();
        assert!(matches!(err, RingError::DegreeMismatch { .. }));
        assert!(matches!(make_map(&s, &u, polys(u.ctx(), &["l1"])), Err(RingError::ImageCount { .. })));
    }

    #[test]
    fn kernels() {
        let s = arc(make_ring("S4", &[("l1", 1), ("d12", 1), ("d23", 1)], &[]).unwrap());
        let z = arc(make_ring("X12", &[("l1", 1)], &[]).unwrap());
        let p = make_map(&s, &z, polys(z.ctx(), &["l1", "-l1", "0"])).unwrap();
        let k = hom_kernel(&p).unwrap();
        assert!(k.equal(&ideal(s.ctx(), &["d23", "d12 + l1"])).unwrap());

        let s = arc(make_ring("S3", &[("l1", 1), ("d23", 1)], &[]).unwrap());
        let u = arc(make_ring("U", &[("l1", 1)], &["6l1^2"]).unwrap());
        let j = make_map(&s, &u, polys(u.ctx(), &["l1", "0"])).unwrap();
        let k = hom_kernel(&j).unwrap();
        assert!(k.equal(&ideal(s.ctx(), &["d23", "6l1^2"])).unwrap());

        let r = arc(make_ring("Xa1", &[("l1", 1), ("x", 1)], &["2l1", "x(x+l1)"]).unwrap());
        let k = hom_kernel(&RingMap::identity(&r)).unwrap();
        assert!(k.equal(r.relations()).unwrap());
    }

    #[test]
    fn kernel_with_name_clash_and_weights() {
        let s = arc(make_ring("S", &[("a", 2), ("b", 3)], &[]).unwrap());
        let t = arc(make_ring("T", &[("a", 1)], &[]).unwrap());
        let m = make_map(&s, &t, polys(t.ctx(), &["a^2", "a^3"])).unwrap();
        let k = hom_kernel(&m).unwrap();
        assert!(k.equal(&ideal(s.ctx(), &["a^3 - b^2"])).unwrap());
    }

    #[test]
    fn surjectivity() {
        let s = arc(make_ring("S6", &[("l1", 1), ("d12", 1), ("d13", 1), ("d23", 1), ("d3", 1)], &[]).unwrap());
        let z = arc(make_ring("X3", &[("l1", 1), ("x", 1)], &["x^2"]).unwrap());
        let p = make_map(&s, &z, polys(z.ctx(), &["l1", "x", "x", "x", "-l1-x"])).unwrap();
        let w = SurjectivityWitness {
            preimages: vec![("l1".into(), polys(s.ctx(), &["l1"])[0].clone()), ("x".into(), polys(s.ctx(), &["d23"])[0].clone())],
        };
        assert!(verify_surjective(&p, &w).is_ok());
        let w2 = SurjectivityWitness {
            preimages: vec![
                ("l1".into(), polys(s.ctx(), &["l1"])[0].clone()),
                ("x".into(), polys(s.ctx(), &["-l1 - d3"])[0].clone()),
            ],
        };
        assert!(verify_surjective(&p, &w2).is_ok());
        let bad = SurjectivityWitness { preimages: vec![("l1".into(), polys(s.ctx(), &["d3"])[0].clone())] };
        assert!(matches!(verify_surjective(&p, &bad), Err(SurjectivityFailure::Wrong { .. })));
        let missing = SurjectivityWitness { preimages: vec![("l1".into(), polys(s.ctx(), &["l1"])[0].clone())] };
        assert_eq!(verify_surjective(&p, &missing), Err(SurjectivityFailure::Missing("x".into())));
        let id = RingMap::identity(&z);
        let w = SurjectivityWitness {
            preimages: vec![("l1".into(), polys(z.ctx(), &["l1"])[0].clone()), ("x".into(), polys(z.ctx(), &["x"])[0].clone())],
        };
        assert!(verify_surjective(&id, &w).is_ok());
    }

    #[test]
    fn graded_pieces() {
        let r = make_ring("L", &[("l1", 1)], &["24l1^2"]).unwrap();
        assert_eq!(graded_piece(&r, 2).unwrap().structure.to_string(), "Z/24");
        assert_eq!(graded_piece(&r, 1).unwrap().structure.to_string(), "Z");
        assert_eq!(graded_piece(&r, 0).unwrap().structure.to_string(), "Z");
        let f = make_ring("F", &[("a", 1), ("b", 1), ("c", 1)], &[]).unwrap();
        for d in 0..5 {
            assert!(graded_piece(&f, d).unwrap().structure.is_torsion_free());
        }
        assert_eq!(graded_piece(&f, 2).unwrap().structure.free_rank, 6);
        assert!(matches!(graded_piece(&f, 7), Err(RingError::DegreeTooLarge { degree: 7, max: 6 })));
        let x = make_ring("Xa1", &[("l1", 1), ("x", 1)], &["2l1", "x(x+l1)"]).unwrap();
        assert_eq!(graded_piece(&x, 1).unwrap().structure.to_string(), "Z + Z/2");
        assert_eq!(graded_piece(&x, 2).unwrap().structure.to_string(), "Z/2 + Z/2");
    }
}
