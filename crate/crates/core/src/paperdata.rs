//! The shipped scenario for the Chow ring of the moduli stack of stable
//! genus-1 curves with 3 markings, the WDVV linear solve, and golden values.
//!
//! ASCII names used in scripts:
//!
//! | script | symbol |
//! |--------|--------|
//! | `l1` | λ₁ |
//! | `d12`, `d13`, `d23`, `d3` | δ₁₂, δ₁₃, δ₂₃, δ₃ |
//! | `dA1`, `dA2`, `dA3` | δ_{α.1}, δ_{α.2}, δ_{α.3} |
//! | `x` | the extra degree-1 generator of a stratum ring |

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::dsl::{self, Scenario};
use crate::poly::{Ctx, Monomial, MonomialOrder, Polynomial, VarContext};
use crate::zla::{in_lattice, ser_display, ser_display_seq, IntMatrix};

pub const SCENARIO_TEXT: &str = include_str!("../scenarios/m13bar.chow");

/// `(script name, symbol)` pairs.
pub const SYMBOLS: [(&str, &str); 9] = [
    ("l1", "λ₁"),
    ("d12", "δ₁₂"),
    ("d13", "δ₁₃"),
    ("d23", "δ₂₃"),
    ("d3", "δ₃"),
    ("dA1", "δ_{α.1}"),
    ("dA2", "δ_{α.2}"),
    ("dA3", "δ_{α.3}"),
    ("x", "x"),
];

/// Graded pieces of the final ring in degrees 0..=5 as
/// `(degree, free rank, torsion invariants)`, from an independent SNF run.
pub const FINAL_RING_GRADED: [(u32, usize, &[u64]); 6] = [
    (0, 1, &[]),
    (1, 5, &[]),
    (2, 5, &[24]),
    (3, 1, &[12, 24, 24, 24, 24]),
    (4, 0, &[12, 24, 24, 24, 24, 24]),
    (5, 0, &[12, 24, 24, 24, 24, 24]),
];

/// Ranks after tensoring with ℚ, degrees 0..=4.
pub const FINAL_RING_RATIONAL_RANKS: [usize; 5] = [1, 5, 5, 1, 0];

/// Relations of the final ring.
pub const FINAL_RELATIONS: [&str; 11] = [
    "24l1^2",
    "d12(d12+d3+l1)",
    "d13(d13+d3+l1)",
    "d23(d23+d3+l1)",
    "d3(d3+d12+l1)",
    "d3(d12-d13)",
    "d3(d12-d23)",
    "d12 d13",
    "d12 d23",
    "d13 d23",
    "12l1^2(l1+d12+d13-d23+d3)",
];

pub fn builtin_scenario() -> Scenario {
    dsl::parse(SCENARIO_TEXT).expect("shipped scenario parses")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WdvvError {
    #[error("{equations} equations in {unknowns} unknowns")]
    NotSquare { equations: usize, unknowns: usize },
    #[error("the system matrix is singular")]
    Singular,
    #[error("term `{0}` is not linear in the unknowns")]
    NonLinear(String),
    #[error("unknown `{0}` is not part of the system")]
    UnknownUnknown(String),
}

/// `lhs · unknowns = rhs · basis`, with the common factor `factor` already
/// cancelled from both sides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WdvvEquation {
    #[serde(serialize_with = "ser_display")]
    pub factor: BigInt,
    #[serde(serialize_with = "ser_display_seq")]
    pub lhs: Vec<BigInt>,
    #[serde(serialize_with = "ser_display_seq")]
    pub rhs: Vec<BigInt>,
}

#[derive(Clone, Debug)]
pub struct WdvvSystem {
    ctx: Ctx,
    unknowns: Vec<usize>,
    basis: Vec<Monomial>,
    pub equations: Vec<WdvvEquation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WdvvSolution {
    pub unknown: String,
    pub basis: Vec<String>,
    /// `multiplier · unknown = vector · basis`, with `multiplier = |det|`.
    #[serde(serialize_with = "ser_display")]
    pub multiplier: BigInt,
    #[serde(serialize_with = "ser_display_seq")]
    pub vector: Vec<BigInt>,
    /// The same identity scaled by the equations' common factor.
    #[serde(serialize_with = "ser_display")]
    pub scaled_multiplier: BigInt,
    #[serde(serialize_with = "ser_display_seq")]
    pub scaled_vector: Vec<BigInt>,
    /// The solution over ℚ.
    #[serde(serialize_with = "ser_display_seq")]
    pub rational: Vec<BigRational>,
    pub integer_kernel_trivial: bool,
    pub text: String,
}

/// Splits `f` into its unknown part and a polynomial free of unknowns.
fn split(ctx: &Ctx, unknowns: &[usize], f: &Polynomial) -> Result<(Vec<BigInt>, Polynomial), WdvvError> {
    let mut coeffs = vec![BigInt::zero(); unknowns.len()];
    let mut rest = Polynomial::zero(ctx);
    for (m, c) in f.terms() {
        let hits: Vec<usize> = unknowns.iter().enumerate().filter(|(_, &u)| m.exps()[u] > 0).map(|(k, _)| k).collect();
        match hits.as_slice() {
            [] => rest.add_term(m.clone(), c.clone()),
            [k] if m.degree() == ctx.weight(unknowns[*k]) && m.exps()[unknowns[*k]] == 1 => coeffs[*k] += c,
            _ => return Err(WdvvError::NonLinear(m.display(ctx))),
        }
    }
    Ok((coeffs, rest))
}

impl WdvvSystem {
    /// Builds the system from equations `left = right` in `ctx`; `unknowns`
    /// name variables of `ctx`. Every other monomial is a basis symbol.
    pub fn from_equations(ctx: &Ctx, unknowns: &[&str], eqs: &[(Polynomial, Polynomial)]) -> Result<Self, WdvvError> {
        let idx: Vec<usize> = unknowns
            .iter()
            .map(|u| ctx.index_of(u).ok_or_else(|| WdvvError::UnknownUnknown(u.to_string())))
            .collect::<Result<_, _>>()?;
        let order = MonomialOrder::grevlex(ctx);
        let mut split_eqs = Vec::new();
        let mut basis: Vec<Monomial> = Vec::new();
        for (l, r) in eqs {
            let (coeffs, rest) = split(ctx, &idx, &(r - l))?;
            for (m, _) in rest.terms() {
                if !basis.contains(m) {
                    basis.push(m.clone());
                }
            }
            split_eqs.push((coeffs, -rest));
        }
        basis.sort_by(|a, b| order.cmp(b, a));
        let equations = split_eqs
            .into_iter()
            .map(|(mut lhs, rest)| {
                let mut rhs: Vec<BigInt> = basis.iter().map(|m| rest.coefficient(m)).collect();
                let g = lhs.iter().chain(rhs.iter()).fold(BigInt::zero(), |g, c| g.gcd(c));
                let factor = if g.is_zero() { BigInt::one() } else { g };
                let neg = lhs.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative());
                for c in lhs.iter_mut().chain(rhs.iter_mut()) {
                    *c = &*c / &factor;
                    if neg {
                        *c = -&*c;
                    }
                }
                WdvvEquation { factor, lhs, rhs }
            })
            .collect();
        Ok(WdvvSystem { ctx: ctx.clone(), unknowns: idx, basis, equations })
    }

    /// The three pushed-forward WDVV relations, each carrying a factor 2.
    pub fn banana() -> Self {
        let ctx = VarContext::new(
            "wdvv",
            &[("dA1", 2), ("dA2", 2), ("dA3", 2), ("l1", 1), ("d12", 1), ("d13", 1), ("d23", 1), ("d3", 1)],
        )
        .unwrap();
        let p = |s: &str| Polynomial::parse(&ctx, s).unwrap();
        let eqs = [
            (p("2(12l1 d12 + 12l1 d3)"), p("2(dA1 + dA2)")),
            (p("2(12l1 d13 + 12l1 d3)"), p("2(dA1 + dA3)")),
            (p("2(12l1 d23 + 12l1 d3)"), p("2(dA2 + dA3)")),
        ];
        WdvvSystem::from_equations(&ctx, &["dA1", "dA2", "dA3"], &eqs).unwrap()
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn unknowns(&self) -> Vec<String> {
        self.unknowns.iter().map(|&i| self.ctx.var_name(i).to_string()).collect()
    }

    pub fn basis(&self) -> Vec<String> {
        self.basis.iter().map(|m| m.display(&self.ctx)).collect()
    }

    pub fn unknown_index(&self, name: &str) -> Option<usize> {
        self.unknowns.iter().position(|&i| self.ctx.var_name(i) == name)
    }

    pub fn matrix(&self) -> IntMatrix {
        IntMatrix::from_rows(self.equations.iter().map(|e| e.lhs.clone()).collect(), self.unknowns.len())
    }

    fn basis_poly(&self, v: &[BigInt]) -> Polynomial {
        Polynomial::from_terms(&self.ctx, self.basis.iter().cloned().zip(v.iter().cloned()))
    }

    /// Whether `left = right` is an integer combination of the reduced
    /// equations. Monomials outside the basis must cancel.
    pub fn implies(&self, left: &Polynomial, right: &Polynomial) -> Result<bool, WdvvError> {
        let (coeffs, rest) = split(&self.ctx, &self.unknowns, &(right - left))?;
        let rhs: Vec<BigInt> = self.basis.iter().map(|m| -rest.coefficient(m)).collect();
        if !(&rest + &self.basis_poly(&rhs)).is_zero() {
            return Ok(false);
        }
        let row = |lhs: &[BigInt], rhs: &[BigInt]| -> Vec<BigInt> { lhs.iter().chain(rhs.iter()).cloned().collect() };
        let rows: Vec<Vec<BigInt>> = self.equations.iter().map(|e| row(&e.lhs, &e.rhs)).collect();
        Ok(in_lattice(&rows, &row(&coeffs, &rhs)))
    }
}

fn minor(m: &IntMatrix, skip_row: usize, skip_col: usize) -> IntMatrix {
    let n = m.rows();
    let rows = (0..n)
        .filter(|&i| i != skip_row)
        .map(|i| (0..n).filter(|&j| j != skip_col).map(|j| m.get(i, j).clone()).collect())
        .collect();
    IntMatrix::from_rows(rows, n - 1)
}

/// Solves for one unknown by the adjugate: `det · u = adj · rhs` holds over
/// ℤ, so the reported multiple of the unknown is an integral consequence.
pub fn wdvv_solve(sys: &WdvvSystem, unknown: usize) -> Result<WdvvSolution, WdvvError> {
    let n = sys.unknowns.len();
    if sys.equations.len() != n {
        return Err(WdvvError::NotSquare { equations: sys.equations.len(), unknowns: n });
    }
    let a = sys.matrix();
    let det = a.determinant();
    if det.is_zero() {
        return Err(WdvvError::Singular);
    }
    let sign = if det.is_negative() { -BigInt::one() } else { BigInt::one() };
    let m = sys.basis.len();
    let mut vector = vec![BigInt::zero(); m];
    for (i, eq) in sys.equations.iter().enumerate() {
        // adj[unknown][i] = (-1)^(i+unknown) · minor(i, unknown)
        let mut cof = if n == 1 { BigInt::one() } else { minor(&a, i, unknown).determinant() };
        if (i + unknown) % 2 == 1 {
            cof = -cof;
        }
        cof *= &sign;
        for (v, r) in vector.iter_mut().zip(&eq.rhs) {
            *v += &cof * r;
        }
    }
    let multiplier = det.abs();
    let factor = sys.equations.iter().fold(BigInt::one(), |l, e| l.lcm(&e.factor));
    let scaled_vector = vector.iter().map(|v| v * &factor).collect();
    let rational = vector.iter().map(|v| BigRational::new(v.clone(), multiplier.clone())).collect();
    let name = sys.ctx.var_name(sys.unknowns[unknown]).to_string();
    let rhs = sys.basis_poly(&vector);
    let text = format!("{multiplier}*{name} = {}", if rhs.is_zero() { "0".to_string() } else { rhs.to_text() });
    Ok(WdvvSolution {
        unknown: name,
        basis: sys.basis(),
        scaled_multiplier: &multiplier * &factor,
        multiplier,
        vector,
        scaled_vector,
        rational,
        integer_kernel_trivial: true,
        text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn banana_system() {
        let sys = WdvvSystem::banana();
        assert_eq!(sys.matrix(), IntMatrix::from_i64(&[&[1, 1, 0], &[1, 0, 1], &[0, 1, 1]]));
        assert_eq!(sys.basis(), vec!["l1*d12", "l1*d13", "l1*d23", "l1*d3"]);
        assert!(sys.equations.iter().all(|e| e.factor == BigInt::from(2)));
    }

    #[test]
    fn solve_first_unknown() {
        let sys = WdvvSystem::banana();
        let s = wdvv_solve(&sys, 0).unwrap();
        assert_eq!(s.multiplier, BigInt::from(2));
        assert_eq!(s.vector, ints(&[12, 12, -12, 12]));
        assert_eq!(s.text, "2*dA1 = 12*l1*d12 + 12*l1*d13 - 12*l1*d23 + 12*l1*d3");
        assert_eq!(s.rational[0], BigRational::from_integer(6.into()));
    }

    #[test]
    fn permuted_unknowns() {
        let sys = WdvvSystem::banana();
        assert_eq!(wdvv_solve(&sys, 1).unwrap().vector, ints(&[12, -12, 12, 12]));
        assert_eq!(wdvv_solve(&sys, 2).unwrap().vector, ints(&[-12, 12, 12, 12]));
    }

    #[test]
    fn implications() {
        let sys = WdvvSystem::banana();
        let p = |s: &str| Polynomial::parse(sys.ctx(), s).unwrap();
        assert!(sys.implies(&p("2dA1"), &p("12l1(d12+d13-d23+d3)")).unwrap());
        assert!(sys.implies(&p("4dA1"), &p("24l1(d12+d13-d23+d3)")).unwrap());
        assert!(!sys.implies(&p("dA1"), &p("6l1(d12+d13-d23+d3)")).unwrap());
        assert!(!sys.implies(&p("2dA1"), &p("12l1(l1+d12+d13-d23+d3)")).unwrap());
        assert!(matches!(sys.implies(&p("dA1 l1"), &p("0")), Err(WdvvError::NonLinear(_))));
    }

    #[test]
    fn zero_right_hand_sides() {
        let ctx = VarContext::new("w", &[("a", 1), ("b", 1), ("c", 1)]).unwrap();
        let p = |s: &str| Polynomial::parse(&ctx, s).unwrap();
        let eqs = [(p("a+b"), p("0")), (p("a+c"), p("0")), (p("b+c"), p("0"))];
        let sys = WdvvSystem::from_equations(&ctx, &["a", "b", "c"], &eqs).unwrap();
        for k in 0..3 {
            let s = wdvv_solve(&sys, k).unwrap();
            assert!(s.vector.is_empty());
            assert!(s.text.ends_with("= 0"));
        }
    }

    #[test]
    fn degenerate_systems() {
        let ctx = VarContext::new("w", &[("a", 1), ("b", 1), ("t", 1)]).unwrap();
        let p = |s: &str| Polynomial::parse(&ctx, s).unwrap();
        let sys = WdvvSystem::from_equations(&ctx, &["a", "b"], &[(p("a+b"), p("t"))]).unwrap();
        assert!(matches!(wdvv_solve(&sys, 0), Err(WdvvError::NotSquare { .. })));
        let sys = WdvvSystem::from_equations(&ctx, &["a", "b"], &[(p("a+b"), p("t")), (p("2a+2b"), p("0"))]).unwrap();
        assert_eq!(wdvv_solve(&sys, 0), Err(WdvvError::Singular));
    }

    #[test]
    fn builtin_parses() {
        let s = builtin_scenario();
        assert_eq!(s.count("ring"), 8);
        assert_eq!(s.count("patch"), 5);
        assert_eq!(s.count("excise"), 1);
        assert_eq!(s.count("wdvv"), 1);
        assert!(s.count("ledger") > 10);
    }
}
