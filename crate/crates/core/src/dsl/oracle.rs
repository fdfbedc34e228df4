//! Independent membership oracle for homogeneous ideals of ℤ[x₁..xₙ].
//!
//! For homogeneous generators, `f` of degree `d` lies in the ideal exactly
//! when its coefficient vector is an integer combination of the vectors of
//! `m·g` with `deg m + deg g = d`. That is a lattice question answered by
//! Hermite normal form, with no Gröbner basis involved.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ideals::Ideal;
use crate::poly::{monomials_of_degree, Ctx, Polynomial, VarContext};
use crate::rings::coefficients;
use crate::zla::in_lattice;

/// Lattice membership test. `None` if some input is not homogeneous.
pub fn lattice_member(gens: &[Polynomial], f: &Polynomial) -> Option<bool> {
    if f.is_zero() {
        return Some(true);
    }
    let d = f.homogeneous_degree()?;
    let ctx = f.ctx();
    let basis = monomials_of_degree(ctx, d);
    let mut rows = Vec::new();
    for g in gens.iter().filter(|g| !g.is_zero()) {
        let e = g.homogeneous_degree()?;
        if e > d {
            continue;
        }
        for m in monomials_of_degree(ctx, d - e) {
            rows.push(coefficients(&g.mul_monomial(&m, &BigInt::from(1)), &basis));
        }
    }
    Some(in_lattice(&rows, &coefficients(f, &basis)))
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub gens: Vec<Polynomial>,
    pub f: Polynomial,
}

fn random_homogeneous(rng: &mut ChaCha8Rng, ctx: &Ctx, d: u32) -> Polynomial {
    let mut terms = Vec::new();
    for m in monomials_of_degree(ctx, d) {
        if rng.gen_bool(0.6) {
            terms.push((m, BigInt::from(rng.gen_range(-30i64..=30))));
        }
    }
    Polynomial::from_terms(ctx, terms)
}

/// A random instance on up to four variables with generators of degree at
/// most three. Half the time `f` is built as a combination of the generators.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(1..=4usize);
    let names: Vec<(String, u32)> = (0..n).map(|i| (format!("x{i}"), 1)).collect();
    let ctx = VarContext::from_owned("oracle", names).expect("distinct names");
    let k = rng.gen_range(1..=3usize);
    let gens: Vec<Polynomial> = (0..k)
        .map(|_| {
            let d = rng.gen_range(1..=3);
            random_homogeneous(rng, &ctx, d)
        })
        .collect();
    let d = rng.gen_range(1..=6);
    let f = if rng.gen_bool(0.5) {
        let mut f = Polynomial::zero(&ctx);
        for g in &gens {
            match g.homogeneous_degree() {
                Some(e) if e <= d => {
                    let h = random_homogeneous(rng, &ctx, d - e);
                    f = f.try_add(&h.try_mul(g).expect("same ring")).expect("same ring");
                }
                _ => {}
            }
        }
        f
    } else {
        random_homogeneous(rng, &ctx, d)
    };
    Instance { gens, f }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleSummary {
    pub seed: u64,
    pub samples: usize,
    pub members: usize,
    pub disagreements: Vec<String>,
}

impl OracleSummary {
    pub fn agreed(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Compares `Ideal::contains` against the lattice oracle on random instances.
pub fn run_oracle(seed: u64, samples: usize) -> OracleSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = 0;
    let mut disagreements = Vec::new();
    for i in 0..samples {
        let inst = random_instance(&mut rng);
        let ctx = inst.f.ctx().clone();
        let ideal = Ideal::new(&ctx, inst.gens.clone()).expect("same ring");
        let gb = ideal.contains(&inst.f);
        let lat = lattice_member(&inst.gens, &inst.f).expect("homogeneous input");
        members += usize::from(lat);
        if gb != lat {
            let gens: Vec<String> = inst.gens.iter().map(|g| g.to_text()).collect();
            disagreements.push(format!(
                "sample {i}: f = {} in ({}): groebner {gb}, lattice {lat}",
                inst.f.to_text(),
                gens.join(", ")
            ));
        }
    }
    OracleSummary { seed, samples, members, disagreements }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_member_basics() {
        let ctx = VarContext::new("t", &[("a", 1), ("b", 1)]).unwrap();
        let p = |s: &str| Polynomial::parse(&ctx, s).unwrap();
        let gens = [p("2*a"), p("3*b")];
        assert_eq!(lattice_member(&gens, &p("2*a*b")), Some(true));
        assert_eq!(lattice_member(&gens, &p("a*b")), Some(true));
        assert_eq!(lattice_member(&gens, &p("a^2")), Some(false));
        assert_eq!(lattice_member(&gens, &p("a + 1")), None);
    }

    #[test]
    fn small_run_agrees() {
        let s = run_oracle(7, 40);
        assert!(s.agreed(), "{:?}", s.disagreements);
        assert!(s.members > 0 && s.members < 40);
    }
}
