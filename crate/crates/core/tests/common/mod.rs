#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::Value;

use chowcheck::dsl::{self, Config, Program};
use chowcheck::paperdata::SCENARIO_TEXT;
use chowcheck::poly::{Ctx, Monomial, Polynomial};

pub fn builtin_program() -> Program {
    let s = dsl::parse(SCENARIO_TEXT).expect("scenario parses");
    dsl::check(&s).expect("scenario checks")
}

pub fn fixture(name: &str) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/");
    std::fs::read_to_string(format!("{path}{name}")).expect("fixture readable")
}

/// Drops every `elapsed_us` key, recursively.
pub fn strip_timings(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("elapsed_us");
            for (_, x) in map.iter_mut() {
                strip_timings(x);
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

pub fn timing_free_json(report: &dsl::Report) -> String {
    let mut v: Value = serde_json::from_str(&report.to_json()).expect("report is json");
    strip_timings(&mut v);
    serde_json::to_string_pretty(&v).unwrap()
}

/// Replaces the single occurrence of `from` in the shipped scenario.
pub fn mutate(from: &str, to: &str) -> String {
    assert_eq!(SCENARIO_TEXT.matches(from).count(), 1, "mutation anchor {from:?} must be unique");
    SCENARIO_TEXT.replacen(from, to, 1)
}

/// `(label, anchor, replacement)` for the negative controls.
pub const MUTATIONS: [(&str, &str, &str); 7] = [
    ("S3 pullback sign", "p { l1 -> l1, d23 -> -l1 }", "p { l1 -> l1, d23 -> l1 }"),
    ("S4 claim sign", "claim (6l1(l1 + d12 - d23), d12(d12 + l1)", "claim (6l1(l1 + d12 - d23), d12(d12 - l1)"),
    (
        "S5 dropped relation",
        "    d12 d13, d12 d23, d13 d23\n  )\n}\n\npatch S6",
        "    d12 d23, d13 d23\n  )\n}\n\npatch S6",
    ),
    ("S6 top Chern class sign", "ctop -l1 - x", "ctop -l1 + x"),
    ("cusp class", "class (24l1^2)", "class (12l1^2)"),
    (
        "ambiguity class",
        "classZ 6l1(l1 + d12 + d13 - d23 + d3)",
        "classZ 6l1(l1 + d12 + d13 + d23 + d3)",
    ),
    (
        "final claim sign",
        "d3(d12 - d13), d3(d12 - d23),\n    d12 d13, d12 d23, d13 d23,\n    12l1^2",
        "d3(d12 + d13), d3(d12 - d23),\n    d12 d13, d12 d23, d13 d23,\n    12l1^2",
    ),
];

/// Faster settings for runs that only need the verdict.
pub fn quick_config() -> Config {
    Config { truncation_degree: 3, keep_going: true, ..Config::default() }
}

// ---------------------------------------------------------------------------
// Brute-force graded pieces: exponent enumeration, Macaulay rows and a
// textbook Smith normal form. Nothing here touches Gröbner bases.

pub fn exponents_of_degree(weights: &[u32], d: u32) -> Vec<Vec<u32>> {
    fn go(weights: &[u32], d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == weights.len() {
            if d == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        let w = weights[prefix.len()];
        for e in 0..=d / w {
            prefix.push(e);
            go(weights, d - e * w, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(weights, d, &mut Vec::new(), &mut out);
    out
}

fn homogeneous_degree(f: &Polynomial, weights: &[u32]) -> u32 {
    let degs: Vec<u32> =
        f.terms().map(|(m, _)| m.exps().iter().zip(weights).map(|(e, w)| e * w).sum()).collect();
    assert!(degs.windows(2).all(|w| w[0] == w[1]), "relation not homogeneous");
    degs[0]
}

/// Rows spanning the degree-`d` part of the ideal, over the columns `exponents_of_degree(d)`.
pub fn macaulay_rows(ctx: &Ctx, relations: &[Polynomial], d: u32) -> (Vec<Vec<u32>>, Vec<Vec<BigInt>>) {
    let weights = ctx.weights().to_vec();
    let cols = exponents_of_degree(&weights, d);
    let index: BTreeMap<&[u32], usize> = cols.iter().enumerate().map(|(i, e)| (e.as_slice(), i)).collect();
    let mut rows = Vec::new();
    for r in relations.iter().filter(|r| !r.is_zero()) {
        let e = homogeneous_degree(r, &weights);
        if e > d {
            continue;
        }
        for shift in exponents_of_degree(&weights, d - e) {
            let m = Polynomial::monomial(ctx, Monomial::new(shift, &weights), 1);
            let prod = m.try_mul(r).unwrap();
            let mut row = vec![BigInt::zero(); cols.len()];
            for (mono, c) in prod.terms() {
                row[index[mono.exps()]] += c;
            }
            rows.push(row);
        }
    }
    (cols, rows)
}

/// Diagonal of the Smith normal form, nonzero entries only, ascending.
pub fn naive_snf(mut a: Vec<Vec<BigInt>>, ncols: usize) -> Vec<BigInt> {
    let nrows = a.len();
    let mut diag = Vec::new();
    let mut t = 0;
    while t < nrows.min(ncols) {
        // smallest nonzero entry in the lower-right block
        let mut best: Option<(usize, usize)> = None;
        for i in t..nrows {
            for j in t..ncols {
                if !a[i][j].is_zero() && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        a.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        let mut clean = true;
        for i in t + 1..nrows {
            let q = a[i][t].div_floor(&a[t][t]);
            if !q.is_zero() {
                for j in t..ncols {
                    let s = &q * &a[t][j];
                    a[i][j] -= s;
                }
            }
            clean &= a[i][t].is_zero();
        }
        for j in t + 1..ncols {
            let q = a[t][j].div_floor(&a[t][t]);
            if !q.is_zero() {
                for i in t..nrows {
                    let s = &q * &a[i][t];
                    a[i][j] -= s;
                }
            }
            clean &= a[t][j].is_zero();
        }
        if !clean {
            continue;
        }
        // pivot must divide the rest of the block
        let bad = (t + 1..nrows).find(|&i| (t + 1..ncols).any(|j| !(&a[i][j] % &a[t][t]).is_zero()));
        if let Some(i) = bad {
            for j in t..ncols {
                let x = a[i][j].clone();
                a[t][j] += x;
            }
            continue;
        }
        diag.push(a[t][t].abs());
        t += 1;
    }
    diag
}

/// `(free rank, torsion invariants > 1)` of the degree-`d` piece.
pub fn brute_force_piece(ctx: &Ctx, relations: &[Polynomial], d: u32) -> (usize, Vec<BigInt>) {
    let (cols, rows) = macaulay_rows(ctx, relations, d);
    let diag = naive_snf(rows, cols.len());
    let torsion = diag.iter().filter(|x| !x.is_one()).cloned().collect();
    (cols.len() - diag.len(), torsion)
}
