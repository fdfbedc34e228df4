//! Patching steps: the relation ideal of a fiber product of Chow rings,
//! the ambiguity coming from the annihilator of the top Chern class, and
//! excision of a closed class.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::ideals::{Annihilator, Ideal, IdealError};
use crate::poly::{monomials_of_degree, Ctx, Monomial, Polynomial};
use crate::rings::{
    coefficients, graded_map_matrix, hom_kernel, make_map, relation_rows, verify_surjective, PresentedRing, RingError,
    RingMap, SurjectivityWitness, DEFAULT_MAX_DEGREE,
};
use crate::zla::{cokernel_structure, in_lattice, lattice_basis, left_kernel, solve_linear, AbelianGroupStructure, IntMatrix};

pub const DEFAULT_TRUNCATION_DEGREE: u32 = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatchError {
    #[error("inconsistent images for `{generator}`: the two sides differ by `{residue}` modulo the top Chern class")]
    Inconsistent { generator: String, residue: String },
    #[error("generator `{generator}` of `{ring}` has no preimage among the candidate generators")]
    NoPreimage { ring: String, generator: String },
    #[error("restriction to the excess ring is not well defined: {0}")]
    Restriction(String),
    #[error("annihilator generator `{generator}` has no recorded preimage")]
    MissingPreimage { generator: String },
    #[error("preimage `{preimage}` of `{target}` misses by `{residue}`")]
    WrongPreimage { target: String, preimage: String, residue: String },
    #[error("class `{0}` is not homogeneous")]
    InhomogeneousClass(String),
    #[error("truncation degree {degree} exceeds the configured maximum {max}")]
    DegreeTooLarge { degree: u32, max: u32 },
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Membership {
    #[serde(rename = "IN")]
    In,
    #[serde(rename = "NOT_IN")]
    NotIn,
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Membership::In => "IN",
            Membership::NotIn => "NOT_IN",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Assertion {
    pub poly: Polynomial,
    pub kind: Membership,
    pub provenance: String,
}

#[derive(Clone, Debug)]
pub struct PatchStep {
    pub name: String,
    /// Ring of the open complement.
    pub open: Arc<PresentedRing>,
    /// Ring of the closed stratum.
    pub closed: Arc<PresentedRing>,
    /// Top Chern class of the normal bundle, in the closed ring.
    pub ctop: Polynomial,
    /// Free ring on the candidate generators.
    pub candidate: Ctx,
    pub j_images: Vec<Polynomial>,
    pub p_images: Vec<Polynomial>,
    pub class_of_z: Polynomial,
    /// `(a, eta)` with `a` in the closed ring and `eta` a candidate polynomial.
    pub annihilator_preimages: Vec<(Polynomial, Polynomial)>,
    pub claimed: Vec<Polynomial>,
    pub assertions: Vec<Assertion>,
}

#[derive(Clone, Debug)]
pub struct ExciseStep {
    pub name: String,
    pub before: Arc<PresentedRing>,
    pub classes: Vec<Polynomial>,
    pub claimed: Vec<Polynomial>,
    pub witness: Option<SurjectivityWitness>,
    pub assertions: Vec<Assertion>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckVerdict {
    pub check: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
    pub elapsed_us: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    pub step: String,
    pub kind: String,
    pub passed: bool,
    pub checks: Vec<CheckVerdict>,
    pub elapsed_us: u64,
}

impl StepReport {
    fn new(step: &str, kind: &str) -> Self {
        StepReport { step: step.to_string(), kind: kind.to_string(), passed: false, checks: Vec::new(), elapsed_us: 0 }
    }

    fn push(&mut self, check: impl Into<String>, passed: bool, detail: impl Into<String>, cert: Option<String>, t: Instant) {
        self.checks.push(CheckVerdict {
            check: check.into(),
            passed,
            detail: detail.into(),
            certificate: cert,
            elapsed_us: t.elapsed().as_micros() as u64,
        });
    }

    fn finish(mut self, start: Instant) -> Self {
        self.passed = !self.checks.is_empty() && self.checks.iter().all(|c| c.passed);
        self.elapsed_us = start.elapsed().as_micros() as u64;
        self
    }

    pub fn check(&self, name: &str) -> Option<&CheckVerdict> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn first_failure(&self) -> Option<&CheckVerdict> {
        self.checks.iter().find(|c| !c.passed)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub truncation_degree: u32,
    pub max_degree: u32,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { truncation_degree: DEFAULT_TRUNCATION_DEGREE, max_degree: DEFAULT_MAX_DEGREE }
    }
}

/// Per-degree outcome of the truncated check.
#[derive(Clone, Debug, Serialize)]
pub struct DegreeVerdict {
    pub degree: u32,
    pub passed: bool,
    /// The fiber product in this degree, as an abstract group.
    pub fiber: AbelianGroupStructure,
    /// A compatible pair `(u, z)` outside the candidate image.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing: Option<(Polynomial, Polynomial)>,
}

fn poly_list(ps: &[Polynomial]) -> String {
    let parts: Vec<String> = ps.iter().map(|p| p.to_text()).collect();
    format!("({})", parts.join(", "))
}

impl PatchStep {
    pub fn candidate_free(&self) -> Arc<PresentedRing> {
        Arc::new(PresentedRing::free(format!("{}.free", self.name), &self.candidate))
    }

    /// The candidate generators modulo the claimed relations.
    pub fn claimed_ring(&self) -> Result<PresentedRing, PatchError> {
        Ok(PresentedRing::new(self.name.clone(), &self.candidate, self.claimed.clone())?)
    }

    /// Closed ring modulo the top Chern class.
    pub fn excess_ring(&self) -> Result<Arc<PresentedRing>, PatchError> {
        Ok(Arc::new(self.closed.quotient_by(format!("{}/ctop", self.closed.name()), std::slice::from_ref(&self.ctop))?))
    }

    pub fn maps(&self) -> Result<(RingMap, RingMap), PatchError> {
        let free = self.candidate_free();
        let j = make_map(&free, &self.open, self.j_images.clone())?;
        let p = make_map(&free, &self.closed, self.p_images.clone())?;
        Ok((j, p))
    }
}

/// Some candidate polynomial mapping to `target` under `m`, found by a
/// linear solve in the degree of `target`.
pub fn find_preimage(m: &RingMap, target: &Polynomial) -> Option<Polynomial> {
    let d = target.homogeneous_degree()?;
    let src = monomials_of_degree(m.source().ctx(), d);
    let tgt = monomials_of_degree(m.target().ctx(), d);
    let mut rows = graded_map_matrix(m, d).to_rows();
    rows.extend(relation_rows(m.target().ctx(), m.target().relations().gens(), d, &tgt));
    let a = IntMatrix::from_rows(rows, tgt.len()).transpose();
    let sol = solve_linear(&a, &coefficients(target, &tgt)).ok()?;
    let terms = src.into_iter().zip(sol.particular).filter(|(_, c)| !c.is_zero());
    Some(Polynomial::from_terms(m.source().ctx(), terms))
}

/// The map from the open ring to the excess ring that closes the square,
/// after checking that it commutes on every candidate generator.
pub fn restriction_map(step: &PatchStep, j: &RingMap, p: &RingMap) -> Result<RingMap, PatchError> {
    let c = step.excess_ring()?;
    let uctx = step.open.ctx();
    let mut images = Vec::new();
    for i in 0..uctx.nvars() {
        let g = Polynomial::var(uctx, i);
        let pre = find_preimage(j, &g).ok_or_else(|| PatchError::NoPreimage {
            ring: step.open.name().to_string(),
            generator: uctx.var_name(i).to_string(),
        })?;
        images.push(p.apply(&pre).transfer(c.ctx()).map_err(RingError::from)?);
    }
    let psi = make_map(&step.open, &c, images).map_err(|e| PatchError::Restriction(e.to_string()))?;
    let cand = &step.candidate;
    for i in 0..cand.nvars() {
        let v = Polynomial::var(cand, i);
        let lhs = psi.apply(&j.apply(&v));
        let rhs = p.apply(&v).transfer(c.ctx()).map_err(RingError::from)?;
        let residue = c.normal_form(&(&lhs - &rhs));
        if !residue.is_zero() {
            return Err(PatchError::Inconsistent { generator: cand.var_name(i).to_string(), residue: residue.to_text() });
        }
    }
    Ok(psi)
}

pub fn fiber_relations(step: &PatchStep) -> Result<Ideal, PatchError> {
    let (j, p) = step.maps()?;
    restriction_map(step, &j, &p)?;
    fiber_of(&j, &p)
}

fn fiber_of(j: &RingMap, p: &RingMap) -> Result<Ideal, PatchError> {
    let kj = hom_kernel(j)?;
    let kp = hom_kernel(p)?;
    Ok(kj.intersect(&kp)?)
}

/// Ideal generated by `eta * class` over the recorded annihilator
/// preimages, after checking that they cover the annihilator of `ctop`.
pub fn ambiguity_ideal(step: &PatchStep) -> Result<Ideal, PatchError> {
    let (_, p) = step.maps()?;
    ambiguity_of(step, &p)
}

fn ambiguity_of(step: &PatchStep, p: &RingMap) -> Result<Ideal, PatchError> {
    let z = &step.closed;
    let zrel = z.relations();
    let ann = match z.annihilator(&step.ctop)? {
        Annihilator::Whole => Ideal::unit(z.ctx()),
        Annihilator::Ideal(i) => i,
    };
    let mut covered = Vec::new();
    let mut gens = Vec::new();
    for (a, eta) in &step.annihilator_preimages {
        let residue = z.normal_form(&(&p.apply(eta) - &a.transfer(z.ctx()).map_err(RingError::from)?));
        if !residue.is_zero() {
            return Err(PatchError::WrongPreimage {
                target: a.to_text(),
                preimage: eta.to_text(),
                residue: residue.to_text(),
            });
        }
        if !ann.contains(a) {
            return Err(PatchError::WrongPreimage {
                target: a.to_text(),
                preimage: eta.to_text(),
                residue: format!("{} does not annihilate the top Chern class", a.to_text()),
            });
        }
        covered.push(a.clone());
        gens.push(eta * &step.class_of_z);
    }
    let cover = zrel.with_generators(&covered)?;
    if let Some((g, _)) = ann.first_outside(&cover) {
        return Err(PatchError::MissingPreimage { generator: g.to_text() });
    }
    Ok(Ideal::new(&step.candidate, gens)?)
}

/// Compares, degree by degree up to `d_max`, the image of the candidate
/// ring in `U ⊕ Z` with the subgroup of pairs agreeing in the excess ring.
pub fn truncated_fiber_check(step: &PatchStep, d_max: u32) -> Result<Vec<DegreeVerdict>, PatchError> {
    let (j, p) = step.maps()?;
    let psi = restriction_map(step, &j, &p)?;
    (0..=d_max).map(|d| truncated_degree(step, &j, &p, &psi, d)).collect()
}

fn truncated_degree(step: &PatchStep, j: &RingMap, p: &RingMap, psi: &RingMap, d: u32) -> Result<DegreeVerdict, PatchError> {
    let u = &step.open;
    let z = &step.closed;
    let c = psi.target();
    let bu = monomials_of_degree(u.ctx(), d);
    let bz = monomials_of_degree(z.ctx(), d);
    let (nu, nz) = (bu.len(), bz.len());
    let width = nu + nz;
    let ru = relation_rows(u.ctx(), u.relations().gens(), d, &bu);
    let rz = relation_rows(z.ctx(), z.relations().gens(), d, &bz);
    let rc = relation_rows(c.ctx(), c.relations().gens(), d, &bz);

    let pad = |left: &[BigInt], right: &[BigInt]| -> Vec<BigInt> {
        let mut v = Vec::with_capacity(width);
        v.extend_from_slice(left);
        v.extend_from_slice(right);
        v
    };
    let zeros_u = vec![BigInt::zero(); nu];
    let zeros_z = vec![BigInt::zero(); nz];
    let mut lifted_relations: Vec<Vec<BigInt>> = ru.iter().map(|r| pad(r, &zeros_z)).collect();
    lifted_relations.extend(rz.iter().map(|r| pad(&zeros_u, r)));

    // (u, z, r) with psi(u) - z - r*R_C = 0
    let mut stack = graded_map_matrix(psi, d).to_rows();
    for i in 0..nz {
        let mut row = vec![BigInt::zero(); nz];
        row[i] = BigInt::from(-1);
        stack.push(row);
    }
    stack.extend(rc.iter().map(|r| r.iter().map(|x| -x).collect::<Vec<_>>()));
    let kernel = left_kernel(&IntMatrix::from_rows(stack, nz));
    let mut fiber: Vec<Vec<BigInt>> = kernel.into_iter().map(|mut k| {
        k.truncate(width);
        k
    }).collect();
    fiber.extend(lifted_relations.iter().cloned());
    let fiber_basis = lattice_basis(&fiber, width);

    let jm = graded_map_matrix(j, d);
    let pm = graded_map_matrix(p, d);
    let mut image: Vec<Vec<BigInt>> = (0..jm.rows()).map(|i| pad(jm.row(i), pm.row(i))).collect();
    image.extend(lifted_relations.iter().cloned());
    let image_basis = lattice_basis(&image, width);

    let structure = quotient_structure(&fiber_basis, &lifted_relations, width);
    let passed = fiber_basis == image_basis;
    let missing = if passed {
        None
    } else {
        fiber_basis.iter().find(|v| !in_lattice(&image_basis, v)).map(|v| {
            let terms = |b: &[Monomial], c: &[BigInt]| b.iter().cloned().zip(c.iter().cloned()).collect::<Vec<_>>();
            (
                Polynomial::from_terms(u.ctx(), terms(&bu, &v[..nu])),
                Polynomial::from_terms(z.ctx(), terms(&bz, &v[nu..])),
            )
        })
    };
    Ok(DegreeVerdict { degree: d, passed, fiber: structure, missing })
}

/// Structure of `span(basis) / span(sub)` for `sub` inside `span(basis)`.
fn quotient_structure(basis: &[Vec<BigInt>], sub: &[Vec<BigInt>], width: usize) -> AbelianGroupStructure {
    let k = basis.len();
    if sub.is_empty() || k == 0 {
        return AbelianGroupStructure::free(k);
    }
    let bt = IntMatrix::from_rows(basis.to_vec(), width).transpose();
    let coords: Vec<Vec<BigInt>> = sub
        .iter()
        .map(|r| solve_linear(&bt, r).expect("relation rows lie in the fiber lattice").particular)
        .collect();
    cokernel_structure(&IntMatrix::from_rows(coords, k))
}

fn assertion_checks(report: &mut StepReport, claimed: &Ideal, assertions: &[Assertion]) {
    for (k, a) in assertions.iter().enumerate() {
        let t = Instant::now();
        let nf = claimed.normal_form(&a.poly);
        let member = nf.is_zero();
        let passed = match a.kind {
            Membership::In => member,
            Membership::NotIn => !member,
        };
        let cert = if passed { None } else { Some(format!("normal form {}", nf.to_text())) };
        report.push(
            format!("assertion[{k}]"),
            passed,
            format!("{} {} claimed; {}", a.poly.to_text(), a.kind, a.provenance),
            cert,
            t,
        );
    }
}

pub fn check_patch_step(step: &PatchStep, opts: &CheckOptions) -> StepReport {
    let start = Instant::now();
    let mut report = StepReport::new(&step.name, "patch");

    let t = Instant::now();
    let (j, p) = match step.maps() {
        Ok(m) => m,
        Err(e) => {
            report.push("maps", false, e.to_string(), None, t);
            return report.finish(start);
        }
    };
    report.push("maps", true, "restriction maps are degree preserving and well defined", None, t);

    let t = Instant::now();
    let psi = match restriction_map(step, &j, &p) {
        Ok(psi) => psi,
        Err(e) => {
            let cert = match &e {
                PatchError::Inconsistent { generator, residue } => {
                    Some(format!("generator {generator}: ctop-reduced images differ by {residue}"))
                }
                _ => None,
            };
            report.push("consistency", false, e.to_string(), cert, t);
            return report.finish(start);
        }
    };
    report.push("consistency", true, "square commutes on every candidate generator", None, t);

    let t = Instant::now();
    let fiber = match fiber_of(&j, &p) {
        Ok(f) => f,
        Err(e) => {
            report.push("fiber_ideal", false, e.to_string(), None, t);
            return report.finish(start);
        }
    };
    report.push("fiber_ideal", true, format!("F = {}", poly_list(&fiber.minimal_generators())), None, t);

    let t = Instant::now();
    let amb = match ambiguity_of(step, &p) {
        Ok(a) => a,
        Err(e) => {
            report.push("ambiguity_ideal", false, e.to_string(), None, t);
            return report.finish(start);
        }
    };
    report.push("ambiguity_ideal", true, format!("A = {}", poly_list(amb.gens())), None, t);

    let claimed = match Ideal::new(&step.candidate, step.claimed.clone()) {
        Ok(c) => c,
        Err(e) => {
            report.push("claimed_in_fiber", false, e.to_string(), None, Instant::now());
            return report.finish(start);
        }
    };

    let t = Instant::now();
    match claimed.first_outside(&fiber) {
        None => report.push("claimed_in_fiber", true, "every claimed relation is a fiber relation", None, t),
        Some((g, nf)) => report.push(
            "claimed_in_fiber",
            false,
            format!("{} is not a fiber relation", g.to_text()),
            Some(format!("normal form {}", nf.to_text())),
            t,
        ),
    }

    let t = Instant::now();
    match amb.first_outside(&fiber) {
        None => report.push("ambiguity_in_fiber", true, "ambiguity classes are fiber relations", None, t),
        Some((g, nf)) => report.push(
            "ambiguity_in_fiber",
            false,
            format!("{} is not a fiber relation", g.to_text()),
            Some(format!("normal form {}", nf.to_text())),
            t,
        ),
    }

    let t = Instant::now();
    let cmp = claimed.sum(&amb).and_then(|ca| fiber.sum(&amb).and_then(|fa| ca.compare(&fa)));
    match cmp {
        Ok(Ok(())) => report.push("claimed_plus_ambiguity", true, "C + A = F + A", None, t),
        Ok(Err(cex)) => {
            let side = if cex.from_left { "C + A" } else { "F + A" };
            report.push(
                "claimed_plus_ambiguity",
                false,
                format!("generator {} of {side} is missing on the other side", cex.generator.to_text()),
                Some(format!("normal form {}", cex.normal_form.to_text())),
                t,
            )
        }
        Err(e) => report.push("claimed_plus_ambiguity", false, e.to_string(), None, t),
    }

    if amb.is_zero_ideal() {
        let t = Instant::now();
        match claimed.compare(&fiber) {
            Ok(Ok(())) => report.push("exactness", true, "no ambiguity; C = F", None, t),
            Ok(Err(cex)) => report.push(
                "exactness",
                false,
                format!("{} separates C and F", cex.generator.to_text()),
                Some(format!("normal form {}", cex.normal_form.to_text())),
                t,
            ),
            Err(e) => report.push("exactness", false, e.to_string(), None, t),
        }
    }

    assertion_checks(&mut report, &claimed, &step.assertions);

    let t = Instant::now();
    if opts.truncation_degree > opts.max_degree {
        let e = PatchError::DegreeTooLarge { degree: opts.truncation_degree, max: opts.max_degree };
        report.push("truncated", false, e.to_string(), None, t);
        return report.finish(start);
    }
    for d in 0..=opts.truncation_degree {
        let t = Instant::now();
        match truncated_degree(step, &j, &p, &psi, d) {
            Ok(v) => {
                let detail = if v.passed {
                    format!("fiber product in degree {d} is {} and is spanned", v.fiber)
                } else {
                    format!("candidate image is a proper part of the fiber product {}", v.fiber)
                };
                let cert = v.missing.map(|(a, b)| format!("compatible pair ({}, {}) has no preimage", a.to_text(), b.to_text()));
                report.push(format!("truncated[{d}]"), v.passed, detail, cert, t);
            }
            Err(e) => report.push(format!("truncated[{d}]"), false, e.to_string(), None, t),
        }
    }
    report.finish(start)
}

pub fn check_excise_step(step: &ExciseStep) -> StepReport {
    let start = Instant::now();
    let mut report = StepReport::new(&step.name, "excise");

    let t = Instant::now();
    match step.classes.iter().find(|c| !c.is_homogeneous()) {
        Some(c) => {
            report.push("classes", false, PatchError::InhomogeneousClass(c.to_text()).to_string(), None, t);
            return report.finish(start);
        }
        None => report.push("classes", true, format!("image ideal {}", poly_list(&step.classes)), None, t),
    }

    let t = Instant::now();
    match &step.witness {
        None => report.push("restriction_surjective", false, "no surjectivity witness recorded", None, t),
        Some(w) => {
            let id = RingMap::identity(&step.before);
            match verify_surjective(&id, w) {
                Ok(()) => report.push("restriction_surjective", true, "every generator has a witness", None, t),
                Err(e) => report.push("restriction_surjective", false, e.to_string(), None, t),
            }
        }
    }

    let t = Instant::now();
    let after = step.before.relations().with_generators(&step.classes);
    let claimed = Ideal::new(step.before.ctx(), step.claimed.clone());
    let claimed = match (after, claimed) {
        (Ok(after), Ok(claimed)) => {
            match after.compare(&claimed) {
                Ok(Ok(())) => report.push("relations", true, "claimed = before + classes", None, t),
                Ok(Err(cex)) => {
                    let side = if cex.from_left { "before + classes" } else { "claimed" };
                    report.push(
                        "relations",
                        false,
                        format!("generator {} of {side} is missing on the other side", cex.generator.to_text()),
                        Some(format!("normal form {}", cex.normal_form.to_text())),
                        t,
                    )
                }
                Err(e) => report.push("relations", false, e.to_string(), None, t),
            }
            claimed
        }
        (Err(e), _) | (_, Err(e)) => {
            report.push("relations", false, e.to_string(), None, t);
            return report.finish(start);
        }
    };
    assertion_checks(&mut report, &claimed, &step.assertions);
    report.finish(start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::VarContext;
    use crate::rings::make_ring;

    fn ps(ctx: &Ctx, s: &[&str]) -> Vec<Polynomial> {
        s.iter().map(|x| Polynomial::parse(ctx, x).unwrap()).collect()
    }

    fn one(ctx: &Ctx, s: &str) -> Polynomial {
        Polynomial::parse(ctx, s).unwrap()
    }

    fn step3() -> PatchStep {
        let u = Arc::new(make_ring("UXi", &[("l1", 1)], &["6l1^2"]).unwrap());
        let z = Arc::new(make_ring("X23", &[("l1", 1)], &["12l1^2"]).unwrap());
        let cand = VarContext::new("S3", &[("l1", 1), ("d23", 1)]).unwrap();
        PatchStep {
            name: "S3".into(),
            ctop: one(z.ctx(), "-l1"),
            j_images: ps(u.ctx(), &["l1", "0"]),
            p_images: ps(z.ctx(), &["l1", "-l1"]),
            class_of_z: one(&cand, "d23"),
            annihilator_preimages: vec![(one(z.ctx(), "12l1"), one(&cand, "12l1"))],
            claimed: ps(&cand, &["6l1(l1-d23)", "d23(d23+l1)"]),
            assertions: vec![
                Assertion { poly: one(&cand, "24l1(l1-d23)"), kind: Membership::In, provenance: "test".into() },
                Assertion { poly: one(&cand, "12l1 d23"), kind: Membership::NotIn, provenance: "test".into() },
            ],
            open: u,
            closed: z,
            candidate: cand,
        }
    }

    #[test]
    fn step3_fiber_and_ambiguity() {
        let s = step3();
        let f = fiber_relations(&s).unwrap();
        let expect = Ideal::new(&s.candidate, ps(&s.candidate, &["d23(d23+l1)", "6l1(l1+d23)", "12l1 d23"])).unwrap();
        assert!(f.equal(&expect).unwrap());
        let a = ambiguity_ideal(&s).unwrap();
        assert_eq!(a.gens(), &ps(&s.candidate, &["12 l1 d23"])[..]);
    }

    #[test]
    fn step3_passes() {
        let r = check_patch_step(&step3(), &CheckOptions { truncation_degree: 4, max_degree: 6 });
        assert!(r.passed, "{:?}", r.first_failure());
        assert!(r.check("exactness").is_none());
        assert!(r.check("truncated[2]").unwrap().detail.contains("Z/6 + Z/12"), "{:?}", r.check("truncated[2]"));
    }

    #[test]
    fn wrong_preimage_and_missing_preimage() {
        let mut s = step3();
        s.annihilator_preimages = vec![(one(s.closed.ctx(), "12l1"), one(&s.candidate, "12d23"))];
        assert!(matches!(ambiguity_ideal(&s), Err(PatchError::WrongPreimage { .. })));
        s.annihilator_preimages.clear();
        assert!(matches!(ambiguity_ideal(&s), Err(PatchError::MissingPreimage { .. })));
        let r = check_patch_step(&s, &CheckOptions::default());
        assert!(!r.passed);
        assert_eq!(r.first_failure().unwrap().check, "ambiguity_ideal");
    }

    #[test]
    fn inconsistent_square_is_reported() {
        let u = Arc::new(make_ring("U", &[("l1", 1)], &[]).unwrap());
        let z = Arc::new(make_ring("Z", &[("l1", 1)], &[]).unwrap());
        let cand = VarContext::new("C", &[("l1", 1), ("d", 1)]).unwrap();
        let s = PatchStep {
            name: "bad".into(),
            ctop: one(z.ctx(), "0"),
            j_images: ps(u.ctx(), &["l1", "0"]),
            p_images: ps(z.ctx(), &["l1", "l1"]),
            class_of_z: one(&cand, "d"),
            annihilator_preimages: vec![],
            claimed: vec![],
            assertions: vec![],
            open: u,
            closed: z,
            candidate: cand,
        };
        match fiber_relations(&s) {
            Err(PatchError::Inconsistent { generator, residue }) => {
                assert_eq!(generator, "d");
                assert_eq!(residue, "-l1");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn failing_assertion_carries_normal_form() {
        let mut s = step3();
        s.assertions[1].kind = Membership::In;
        let r = check_patch_step(&s, &CheckOptions { truncation_degree: 1, max_degree: 6 });
        let c = r.check("assertion[1]").unwrap();
        assert!(!c.passed);
        assert_eq!(c.certificate.as_deref(), Some("normal form -12*d23^2"));
    }

    #[test]
    fn step4_exact() {
        let u = Arc::new(make_ring("S3", &[("l1", 1), ("d23", 1)], &["6l1(l1-d23)", "d23(d23+l1)"]).unwrap());
        let z = Arc::new(make_ring("X12", &[("l1", 1)], &[]).unwrap());
        let cand = VarContext::new("S4", &[("l1", 1), ("d12", 1), ("d23", 1)]).unwrap();
        let s = PatchStep {
            name: "S4".into(),
            ctop: one(z.ctx(), "-l1"),
            j_images: ps(u.ctx(), &["l1", "0", "d23"]),
            p_images: ps(z.ctx(), &["l1", "-l1", "0"]),
            class_of_z: one(&cand, "d12"),
            annihilator_preimages: vec![],
            claimed: ps(&cand, &["6l1(l1+d12-d23)", "d12(d12+l1)", "d23(d23+l1)", "d12 d23"]),
            assertions: vec![],
            open: u,
            closed: z,
            candidate: cand,
        };
        let r = check_patch_step(&s, &CheckOptions { truncation_degree: 3, max_degree: 6 });
        assert!(r.passed, "{:?}", r.first_failure());
        assert!(r.check("exactness").unwrap().passed);

        let mut bad = s.clone();
        bad.claimed[0] = one(&bad.candidate, "6l1(l1+d12+d23)");
        let r = check_patch_step(&bad, &CheckOptions { truncation_degree: 1, max_degree: 6 });
        assert!(!r.passed);
        assert!(!r.check("claimed_plus_ambiguity").unwrap().passed);
    }

    #[test]
    fn zero_closed_ring_gives_kernel_of_j() {
        let u = Arc::new(make_ring("U", &[("l1", 1)], &["2l1"]).unwrap());
        let z = Arc::new(make_ring("Zero", &[("l1", 1)], &["1"]).unwrap());
        let cand = VarContext::new("C", &[("l1", 1)]).unwrap();
        let s = PatchStep {
            name: "deg".into(),
            ctop: one(z.ctx(), "0"),
            j_images: ps(u.ctx(), &["l1"]),
            p_images: ps(z.ctx(), &["l1"]),
            class_of_z: one(&cand, "0"),
            annihilator_preimages: vec![],
            claimed: vec![],
            assertions: vec![],
            open: u.clone(),
            closed: z,
            candidate: cand.clone(),
        };
        let f = fiber_relations(&s).unwrap();
        assert!(f.equal(&Ideal::new(&cand, ps(&cand, &["2l1"])).unwrap()).unwrap());
    }

    #[test]
    fn truncation_bound_enforced() {
        let r = check_patch_step(&step3(), &CheckOptions { truncation_degree: 7, max_degree: 6 });
        assert!(!r.check("truncated").unwrap().passed);
    }

    #[test]
    fn excision() {
        let before = Arc::new(make_ring("B", &[("l1", 1), ("x", 1)], &["x^2"]).unwrap());
        let ctx = before.ctx().clone();
        let witness = SurjectivityWitness {
            preimages: vec![("l1".into(), one(&ctx, "l1")), ("x".into(), one(&ctx, "x"))],
        };
        let step = ExciseStep {
            name: "cusp".into(),
            before: before.clone(),
            classes: ps(&ctx, &["24l1^2"]),
            claimed: ps(&ctx, &["x^2", "24 l1^2"]),
            witness: Some(witness.clone()),
            assertions: vec![],
        };
        assert!(check_excise_step(&step).passed);
        let mut bad = step.clone();
        bad.classes = ps(&ctx, &["12l1^2"]);
        let r = check_excise_step(&bad);
        assert!(!r.passed && r.check("relations").unwrap().certificate.is_some());
        let mut empty = step.clone();
        empty.classes = ps(&ctx, &["0"]);
        empty.claimed = ps(&ctx, &["x^2"]);
        assert!(check_excise_step(&empty).passed);
        let mut nowit = step;
        nowit.witness = None;
        assert!(!check_excise_step(&nowit).passed);
    }
}
