//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;

use chowcheck::dsl::{self, Config, Decl, LedgerCmd};
use chowcheck::ideals::Ideal;
use chowcheck::ledger::{AxiomKey, Ledger};
use chowcheck::paperdata::{
    wdvv_solve, WdvvSystem, FINAL_RELATIONS, FINAL_RING_GRADED, FINAL_RING_RATIONAL_RANKS, SCENARIO_TEXT,
};
use chowcheck::patch::{ambiguity_ideal, check_patch_step, check_excise_step, fiber_relations, CheckOptions, PatchStep};
use chowcheck::poly::{Ctx, Polynomial};
use chowcheck::rings::graded_piece;
use common::{brute_force_piece, builtin_program, mutate, quick_config, timing_free_json, MUTATIONS};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn polys(ctx: &Ctx, texts: &[&str]) -> Vec<Polynomial> {
    texts.iter().map(|t| Polynomial::parse(ctx, t).expect("relation parses")).collect()
}

fn within(t: Instant, limit: Duration) -> Result<String, String> {
    let e = t.elapsed();
    ensure(e < limit, format!("took {:.2} s, limit {} s", e.as_secs_f64(), limit.as_secs()))?;
    Ok(format!("{:.2} s", e.as_secs_f64()))
}

fn fiber_equals(step: &PatchStep, expected: &[&str], with_claim: bool, limit: Duration) -> Outcome {
    let t = Instant::now();
    let fiber = fiber_relations(step).map_err(|e| e.to_string())?;
    let want = Ideal::new(&step.candidate, polys(&step.candidate, expected)).map_err(|e| e.to_string())?;
    ensure(fiber.equal(&want).map_err(|e| e.to_string())?, format!("fiber ideal {} differs", fiber.to_text()))?;
    if with_claim {
        let claimed = Ideal::new(&step.candidate, step.claimed.clone()).map_err(|e| e.to_string())?;
        ensure(claimed.equal(&want).map_err(|e| e.to_string())?, "scenario claim differs from expected list")?;
    }
    within(t, limit)
}

fn criterion_1() -> Outcome {
    let prog = builtin_program();
    let step = prog.patch_step("S3").ok_or("no step S3")?;
    fiber_equals(step, &["d23(d23 + l1)", "6l1(l1 + d23)", "12l1 d23"], false, Duration::from_secs(1))
}

fn criterion_2() -> Outcome {
    let prog = builtin_program();
    let s4 = prog.patch_step("S4").ok_or("no step S4")?;
    let s5 = prog.patch_step("S5").ok_or("no step S5")?;
    ensure(s4.claimed.len() == 4 && s5.claimed.len() == 7, "claim sizes are not 4 and 7")?;
    let a = fiber_equals(
        s4,
        &["6l1(l1 + d12 - d23)", "d12(d12 + l1)", "d23(d23 + l1)", "d12 d23"],
        true,
        Duration::from_secs(5),
    )?;
    let b = fiber_equals(
        s5,
        &[
            "6l1(l1 + d12 + d13 - d23)",
            "d12(d12 + l1)",
            "d13(d13 + l1)",
            "d23(d23 + l1)",
            "d12 d13",
            "d12 d23",
            "d13 d23",
        ],
        true,
        Duration::from_secs(5),
    )?;
    Ok(format!("S4 {a}, S5 {b}"))
}

fn criterion_3() -> Outcome {
    let prog = builtin_program();
    let s6 = prog.patch_step("S6").ok_or("no step S6")?;
    ensure(s6.claimed.len() == 10, "claim size is not 10")?;
    let t = Instant::now();
    let timing = fiber_equals(
        s6,
        &[
            "6l1(l1 + d12 + d13 - d23 + d3)",
            "d12(d12 + d3 + l1)",
            "d13(d13 + d3 + l1)",
            "d23(d23 + d3 + l1)",
            "d3(d3 + d12 + l1)",
            "d3(d12 - d13)",
            "d3(d12 - d23)",
            "d12 d13",
            "d12 d23",
            "d13 d23",
        ],
        true,
        Duration::from_secs(10),
    )?;
    let (_, p) = s6.maps().map_err(|e| e.to_string())?;
    let d3 = Polynomial::parse(&s6.candidate, "d3").unwrap();
    let image = p.apply_reduced(&d3);
    let want = s6.closed.normal_form(&s6.closed.parse("-l1 - x").map_err(|e| e.to_string())?);
    ensure(image == want, format!("p*(d3) = {}", image.to_text()))?;
    within(t, Duration::from_secs(10))?;
    Ok(format!("{timing}, p*(d3) = {}", image.to_text()))
}

fn criterion_4() -> Outcome {
    let prog = builtin_program();
    let step = prog.excise_step("Xpre").ok_or("no step Xpre")?;
    let s6 = prog.ring("S6").ok_or("no ring S6")?;
    let ctx = s6.ctx();
    let cusp = polys(ctx, &["24l1^2"]);
    ensure(step.classes == cusp, "excised class is not 24l1^2")?;
    let sum = s6.relations().with_generators(&cusp).map_err(|e| e.to_string())?;
    let claimed = Ideal::new(ctx, step.claimed.clone()).map_err(|e| e.to_string())?;
    ensure(sum.equal(&claimed).map_err(|e| e.to_string())?, "S6 + (24l1^2) differs from the claim")?;
    let r = check_excise_step(step);
    ensure(r.passed, format!("excise check failed: {:?}", r.first_failure()))?;
    Ok(format!("{} relations", claimed.gens().len()))
}

fn criterion_5() -> Outcome {
    let prog = builtin_program();
    let step = prog.patch_step("M13").ok_or("no step M13")?;
    let t = Instant::now();
    let amb = ambiguity_ideal(step).map_err(|e| e.to_string())?;
    let a = Ideal::new(&step.candidate, polys(&step.candidate, &["6l1(l1 + d12 + d13 - d23 + d3)"])).unwrap();
    ensure(amb.equal(&a).map_err(|e| e.to_string())?, format!("A = {}", amb.to_text()))?;
    let r = check_patch_step(step, &CheckOptions::default());
    for name in ["claimed_plus_ambiguity", "assertion[0]", "assertion[1]"] {
        let c = r.check(name).ok_or(format!("missing check {name}"))?;
        ensure(c.passed, format!("{name}: {}", c.detail))?;
    }
    ensure(r.passed, format!("step failed: {:?}", r.first_failure()))?;
    within(t, Duration::from_secs(30))
}

fn criterion_6() -> Outcome {
    let sys = WdvvSystem::banana();
    let s = wdvv_solve(&sys, 0).map_err(|e| e.to_string())?;
    let ctx = sys.ctx();
    let p = |t: &str| Polynomial::parse(ctx, t).unwrap();
    ensure(s.multiplier == BigInt::from(2), format!("multiplier {}", s.multiplier))?;
    ensure(sys.implies(&p("2dA1"), &p("12l1(d12 + d13 - d23 + d3)")).map_err(|e| e.to_string())?, "2dA1 form")?;
    ensure(sys.implies(&p("4dA1"), &p("24l1(d12 + d13 - d23 + d3)")).map_err(|e| e.to_string())?, "4dA1 form")?;
    ensure(!sys.implies(&p("2dA1"), &p("12l1(d12 + d13 + d23 + d3)")).map_err(|e| e.to_string())?, "wrong sign accepted")?;
    Ok(s.text)
}

/// Ledger from the scenario's ledger lines, minus one axiom.
fn scenario_ledger(skip: Option<&(String, AxiomKey)>) -> Ledger {
    let mut l = Ledger::new();
    for d in &dsl::parse(SCENARIO_TEXT).unwrap().declarations {
        let Decl::Ledger(cmd) = &d.decl else { continue };
        match cmd {
            LedgerCmd::Node(n) => l.add_node(&n.text).unwrap(),
            LedgerCmd::Axiom { node, key, provenance } => {
                let k = AxiomKey::parse(&key.text).unwrap();
                if skip != Some(&(node.text.clone(), k)) {
                    l.add_axiom(&node.text, &key.text, provenance).unwrap();
                }
            }
            LedgerCmd::Edge { x, z, u } => {
                l.add_edge(&x.text, &z.text, &u.text).unwrap();
            }
            LedgerCmd::Derive { .. } | LedgerCmd::Exact { .. } => {}
        }
    }
    l
}

fn criterion_7() -> Outcome {
    let composite = ["UXi", "S3", "S4", "S5", "X", "M13minusA", "M13"];
    let mut used = 0;
    for ell in [2, 3] {
        let d = scenario_ledger(None).derive("M13", ell).map_err(|e| e.to_string())?;
        let leaves = d.leaves();
        for leaf in &leaves {
            ensure(
                !(composite.contains(&leaf.0.as_str()) && leaf.1 == AxiomKey::Vanishing(ell)),
                format!("vanishing assumed on composite {}", leaf.0),
            )?;
            let broken = scenario_ledger(Some(leaf)).derive("M13", ell).is_err();
            ensure(broken, format!("l={ell}: derivation survives without {} {}", leaf.0, leaf.1))?;
        }
        used += leaves.len();
    }
    Ok(format!("{used} leaf axioms across l=2,3, each necessary"))
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let s = dsl::oracle::run_oracle(20240613, 500);
    ensure(s.agreed(), format!("{} disagreements: {:?}", s.disagreements.len(), s.disagreements.first()))?;
    let timing = within(t, Duration::from_secs(60))?;
    Ok(format!("500 samples, {} members, {timing}", s.members))
}

fn criterion_9() -> Outcome {
    let prog = builtin_program();
    let ring = prog.ring("M13").ok_or("no ring M13")?;
    let ctx = ring.ctx();
    let rels = polys(ctx, &FINAL_RELATIONS);
    let want = Ideal::new(ctx, rels.clone()).unwrap();
    ensure(ring.relations().equal(&want).map_err(|e| e.to_string())?, "M13 relations differ from the final list")?;
    let mut ranks = vec![1];
    for d in 1..=4u32 {
        let piece = graded_piece(ring, d).map_err(|e| e.to_string())?.structure;
        let (rank, torsion) = brute_force_piece(ctx, &rels, d);
        ensure(piece.free_rank == rank && piece.torsion == torsion, format!("degree {d}: {piece} vs brute force"))?;
        let golden = FINAL_RING_GRADED[d as usize];
        let golden_t: Vec<BigInt> = golden.2.iter().map(|&x| BigInt::from(x)).collect();
        ensure(golden.1 == rank && golden_t == torsion, format!("degree {d}: golden value differs"))?;
        ranks.push(rank);
    }
    ensure(ranks[1] == 5, "degree 1 is not free of rank 5")?;
    ensure(ranks == FINAL_RING_RATIONAL_RANKS, format!("rational ranks {ranks:?}"))?;
    Ok(format!("rational ranks {ranks:?}"))
}

fn criterion_10() -> Outcome {
    let mut certified = 0;
    for (label, from, to) in MUTATIONS {
        let report = dsl::run_text(&mutate(from, to), &quick_config()).map_err(|e| format!("{label}: {e}"))?;
        ensure(!report.passed, format!("mutant `{label}` passed"))?;
        let has_cert =
            report.failures().flat_map(|d| d.checks.iter()).any(|c| !c.passed && c.certificate.is_some());
        ensure(has_cert, format!("mutant `{label}` failed without a certificate"))?;
        certified += 1;
    }
    ensure(certified >= 6, "fewer than 6 controls")?;
    Ok(format!("{certified} mutants rejected with certificates"))
}

fn criterion_11() -> Outcome {
    let a = dsl::run_text(SCENARIO_TEXT, &Config::default()).map_err(|e| e.to_string())?;
    let b = dsl::run_text(SCENARIO_TEXT, &Config::default()).map_err(|e| e.to_string())?;
    ensure(a.passed, "builtin scenario does not pass")?;
    let (ja, jb) = (timing_free_json(&a), timing_free_json(&b));
    ensure(ja == jb, "reports differ outside timing fields")?;
    Ok(format!("{} declarations, {} bytes", a.declarations.len(), ja.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("step-3 fiber ideal", criterion_1),
        ("steps 4 and 5 fiber ideals", criterion_2),
        ("step-6 fiber ideal and pullback of d3", criterion_3),
        ("cusp excision", criterion_4),
        ("final step modulo ambiguity, assertions", criterion_5),
        ("WDVV solve", criterion_6),
        ("ledger derivation and minimality", criterion_7),
        ("membership oracle equivalence", criterion_8),
        ("graded cross-check", criterion_9),
        ("negative controls", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(note) => println!("PASS criterion {:>2}: {name} ({note})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
