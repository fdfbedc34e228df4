use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::sema::{Item, Op, WdvvBlock};
use super::*;
use crate::ideals::Annihilator;
use crate::ledger::{Ledger, LedgerError};
use crate::paperdata::{wdvv_solve, WdvvSolution};
use num_traits::{Signed, Zero};
use crate::patch::{check_excise_step, check_patch_step, CheckOptions, CheckVerdict, StepReport, DEFAULT_TRUNCATION_DEGREE};
use crate::poly::Polynomial;
use crate::rings::{graded_piece_bounded, make_map, verify_surjective, RingMap};

pub const ENGINE: &str = concat!("chowcheck ", env!("CARGO_PKG_VERSION"));

/// Environment variable naming a TOML config file.
pub const CONFIG_ENV: &str = "CHOWCHECK_CONFIG";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Degrees `0..=truncation_degree` get the truncated fiber check.
    pub truncation_degree: u32,
    /// Ceiling for any degree-indexed enumeration.
    pub max_degree: u32,
    pub keep_going: bool,
    /// Log Gröbner basis pair processing to stderr.
    pub trace_gb: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config { truncation_degree: DEFAULT_TRUNCATION_DEGREE, max_degree: 24, keep_going: false, trace_gb: false }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeclRecord {
    pub index: usize,
    pub line: usize,
    pub kind: String,
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
    pub elapsed_us: u64,
}

impl DeclRecord {
    pub fn check(&self, name: &str) -> Option<&CheckVerdict> {
        self.checks.iter().find(|c| c.check == name)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub engine: String,
    pub config: Config,
    pub passed: bool,
    /// Index of the declaration whose hard error stopped the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halted_at: Option<usize>,
    pub declarations: Vec<DeclRecord>,
    pub elapsed_us: u64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failures(&self) -> impl Iterator<Item = &DeclRecord> {
        self.declarations.iter().filter(|d| !d.passed)
    }

    pub fn find(&self, kind: &str, name: &str) -> Option<&DeclRecord> {
        self.declarations.iter().find(|d| d.kind == kind && d.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(
            out,
            "{} (truncation degree {}, max degree {}{})",
            self.engine,
            c.truncation_degree,
            c.max_degree,
            if c.keep_going { ", keep going" } else { "" }
        );
        for d in &self.declarations {
            let mark = if d.passed { "[ok]  " } else { "[FAIL]" };
            let label = if d.name.is_empty() { d.kind.clone() } else { format!("{} {}", d.kind, d.name) };
            let _ = writeln!(out, "{mark} line {:>3}  {label}  ({} checks, {:.3} s)", d.line, d.checks.len(), d.elapsed_us as f64 / 1e6);
            for ch in d.checks.iter().filter(|c| !c.passed) {
                let _ = writeln!(out, "         {}: {}", ch.check, ch.detail);
                if let Some(cert) = &ch.certificate {
                    let _ = writeln!(out, "           certificate: {cert}");
                }
            }
        }
        if let Some(i) = self.halted_at {
            let _ = writeln!(out, "halted after declaration {i}; rerun with --keep-going to continue past hard errors");
        }
        let failed = self.failures().count();
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{verdict}: {} declarations, {failed} failed", self.declarations.len());
        out
    }
}

struct Outcome {
    checks: Vec<CheckVerdict>,
    data: Option<Value>,
    hard: bool,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checks: Vec::new(), data: None, hard: false }
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

    fn hard_fail(check: &str, detail: impl Into<String>, t: Instant) -> Self {
        let mut o = Outcome::new();
        o.push(check, false, detail, None, t);
        o.hard = true;
        o
    }

    fn from_step(r: StepReport) -> Self {
        Outcome { checks: r.checks, data: None, hard: false }
    }
}

struct Runner<'a> {
    config: &'a Config,
    maps: BTreeMap<String, RingMap>,
    ledger: Ledger,
}

fn list(ps: &[Polynomial]) -> String {
    format!("({})", ps.iter().map(|p| p.to_text()).collect::<Vec<_>>().join(", "))
}

impl Runner<'_> {
    fn map(&self, name: &str, t: Instant) -> Result<&RingMap, Outcome> {
        self.maps.get(name).ok_or_else(|| Outcome::hard_fail("map", format!("map `{name}` is unavailable"), t))
    }

    fn step(&mut self, item: &Item) -> Outcome {
        let t = Instant::now();
        match &item.op {
            Op::Ring { ring, provenance } => {
                let mut o = Outcome::new();
                match ring.relations().contains_constant() {
                    Some(c) if c != 0.into() => {
                        o.push("proper", false, format!("{ring} contains the constant {c}"), None, t)
                    }
                    _ => o.push("proper", true, ring.to_string(), None, t),
                }
                o.data = Some(json!({ "proper": ring.to_string(), "provenance": provenance }));
                o
            }
            Op::Map { source, target, images } => match make_map(source, target, images.clone()) {
                Ok(m) => {
                    let mut o = Outcome::new();
                    o.push("well_defined", true, "every relation maps into the target relations", None, t);
                    o.data = Some(json!({ "images": images.iter().map(|p| p.to_text()).collect::<Vec<_>>() }));
                    self.maps.insert(item.name.clone(), m);
                    o
                }
                Err(e) => Outcome::hard_fail("well_defined", e.to_string(), t),
            },
            Op::Patch(step) => {
                let opts = CheckOptions { truncation_degree: self.config.truncation_degree, max_degree: self.config.max_degree };
                let mut o = Outcome::from_step(check_patch_step(step, &opts));
                o.data = Some(json!({ "claimed": &step.claimed }));
                o
            }
            Op::Excise(step) => {
                let mut o = Outcome::from_step(check_excise_step(step));
                o.data = Some(json!({ "claimed": &step.claimed }));
                o
            }
            Op::Wdvv(block) => self.wdvv(block, t),
            Op::Ledger(cmd) => self.ledger(cmd, t),
            Op::IdealEq { ring, left, right } => {
                let mut o = Outcome::new();
                let rel = ring.relations();
                let cmp = rel.with_generators(left).and_then(|l| rel.with_generators(right).and_then(|r| l.compare(&r)));
                match cmp {
                    Ok(Ok(())) => o.push("ideal_eq", true, format!("{} = {} in {}", list(left), list(right), ring.name()), None, t),
                    Ok(Err(cex)) => {
                        let side = if cex.from_left { "left" } else { "right" };
                        o.push(
                            "ideal_eq",
                            false,
                            format!("{side} generator {} is not in the other ideal", cex.generator.to_text()),
                            Some(format!("normal form {}", cex.normal_form.to_text())),
                            t,
                        )
                    }
                    Err(e) => o.push("ideal_eq", false, e.to_string(), None, t),
                }
                o
            }
            Op::Graded { ring, degree, rank, torsion } => {
                let mut o = Outcome::new();
                match graded_piece_bounded(ring, *degree, self.config.max_degree) {
                    Ok(piece) => {
                        let s = &piece.structure;
                        let passed = s.free_rank == *rank && &s.torsion == torsion;
                        let cert = (!passed).then(|| {
                            let want: Vec<String> = torsion.iter().map(|t| t.to_string()).collect();
                            format!("expected rank {rank} torsion [{}], found {s}", want.join(", "))
                        });
                        o.push("graded", passed, format!("degree {degree} piece of {} is {s}", ring.name()), cert, t);
                        o.data = Some(json!({ "degree": degree, "basis_size": piece.basis.len(), "structure": s }));
                    }
                    Err(e) => o.push("graded", false, e.to_string(), None, t),
                }
                o
            }
            Op::Nzd { ring, poly } => {
                let mut o = Outcome::new();
                let detail = |what: &str| format!("{} {what} in {}", poly.to_text(), ring.name());
                match ring.annihilator(poly) {
                    Ok(Annihilator::Whole) => {
                        o.push("nzd", false, detail("is zero"), Some("annihilator is the whole ring".into()), t)
                    }
                    Ok(Annihilator::Ideal(a)) => {
                        let rel = ring.relations();
                        let extra: Vec<Polynomial> =
                            a.minimal_generators().into_iter().filter(|g| !rel.contains(g)).collect();
                        if extra.is_empty() {
                            o.push("nzd", true, detail("is a nonzerodivisor"), None, t)
                        } else {
                            o.push("nzd", false, detail("is a zero divisor"), Some(format!("annihilated by {}", list(&extra))), t)
                        }
                    }
                    Err(e) => o.push("nzd", false, e.to_string(), None, t),
                }
                o
            }
            Op::Surjective { map, witness } => {
                let m = match self.map(map, t) {
                    Ok(m) => m,
                    Err(o) => return o,
                };
                let mut o = Outcome::new();
                match verify_surjective(m, witness) {
                    Ok(()) => o.push("surjective", true, "every target generator has a preimage", None, t),
                    Err(e) => o.push("surjective", false, e.to_string(), None, t),
                }
                o
            }
            Op::Image { map, source, target } => {
                let m = match self.map(map, t) {
                    Ok(m) => m,
                    Err(o) => return o,
                };
                let mut o = Outcome::new();
                let got = m.apply_reduced(source);
                let residue = m.target().normal_form(&(&m.apply(source) - target));
                let detail = format!("{map}({}) = {}", source.to_text(), got.to_text());
                if residue.is_zero() {
                    o.push("image", true, detail, None, t);
                } else {
                    o.push("image", false, detail, Some(format!("differs from {} by {}", target.to_text(), residue.to_text())), t);
                }
                o
            }
            Op::Note(text) => {
                let mut o = Outcome::new();
                o.push("note", true, text.clone(), None, t);
                o
            }
        }
    }

    fn wdvv(&self, block: &WdvvBlock, t: Instant) -> Outcome {
        let mut o = Outcome::new();
        let sys = &block.system;
        let det = sys.matrix().determinant();
        o.push(
            "system",
            !det.is_zero(),
            format!("{} equations in {}; determinant {det}", sys.equations.len(), sys.unknowns().join(", ")),
            None,
            t,
        );
        let mut solutions = Vec::new();
        for &k in &block.solve {
            let t = Instant::now();
            let name = &sys.unknowns()[k];
            match wdvv_solve(sys, k) {
                Ok(s) => {
                    let detail = format!("{}; times {}: {}", s.text, &s.scaled_multiplier / &s.multiplier, scaled_text(&s));
                    o.push(format!("solve[{name}]"), true, detail, None, t);
                    solutions.push(s);
                }
                Err(e) => o.push(format!("solve[{name}]"), false, e.to_string(), None, t),
            }
        }
        for (k, (l, r)) in block.expects.iter().enumerate() {
            let t = Instant::now();
            let detail = format!("{} = {}", l.to_text(), r.to_text());
            match sys.implies(l, r) {
                Ok(true) => o.push(format!("expect[{k}]"), true, detail, None, t),
                Ok(false) => o.push(
                    format!("expect[{k}]"),
                    false,
                    detail,
                    Some("not an integer combination of the equations".into()),
                    t,
                ),
                Err(e) => o.push(format!("expect[{k}]"), false, e.to_string(), None, t),
            }
        }
        o.data = Some(json!({
            "matrix": sys.matrix().to_rows().iter().map(|r| r.iter().map(|c| c.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "basis": sys.basis(),
            "solutions": solutions,
        }));
        o
    }

    fn ledger(&mut self, cmd: &LedgerCmd, t: Instant) -> Outcome {
        let mut o = Outcome::new();
        let hard = |e: LedgerError| Outcome::hard_fail("ledger", e.to_string(), t);
        match cmd {
            LedgerCmd::Node(n) => match self.ledger.add_node(&n.text) {
                Ok(()) => o.push("record", true, format!("node {}", n.text), None, t),
                Err(e) => return hard(e),
            },
            LedgerCmd::Axiom { node, key, provenance } => match self.ledger.add_axiom(&node.text, &key.text, provenance) {
                Ok(()) => o.push("record", true, format!("{} on {}: {provenance}", key.text, node.text), None, t),
                Err(e) => return hard(e),
            },
            LedgerCmd::Edge { x, z, u } => match self.ledger.add_edge(&x.text, &z.text, &u.text) {
                Ok(i) => o.push("record", true, format!("edge {i}: {} closed in {} with complement {}", z.text, x.text, u.text), None, t),
                Err(e) => return hard(e),
            },
            LedgerCmd::Derive { node, ells } => {
                let mut trees = serde_json::Map::new();
                for &l in ells {
                    let t = Instant::now();
                    match self.ledger.derive(&node.text, l) {
                        Ok(d) => {
                            let leaves = d.leaves();
                            o.push(
                                format!("derive[{l}]"),
                                true,
                                format!("vanishing at {} for l={l} from {} axioms, depth {}", node.text, leaves.len(), d.depth()),
                                None,
                                t,
                            );
                            let t = Instant::now();
                            let redundant: Vec<String> = self
                                .ledger
                                .minimality(&node.text, l, &d)
                                .into_iter()
                                .filter(|(_, broken)| !broken)
                                .map(|((n, k), _)| format!("{k} on {n}"))
                                .collect();
                            let ok = redundant.is_empty();
                            let cert = (!ok).then(|| format!("removable: {}", redundant.join(", ")));
                            o.push(format!("minimal[{l}]"), ok, "removing any used axiom breaks the derivation", cert, t);
                            trees.insert(l.to_string(), serde_json::to_value(&d).expect("derivation serializes"));
                        }
                        Err(e) => o.push(format!("derive[{l}]"), false, e.to_string(), None, t),
                    }
                }
                o.data = Some(Value::Object(trees));
            }
            LedgerCmd::Exact { x, z, u, ells } => match self.ledger.check_left_exactness(&x.text, &z.text, &u.text, ells) {
                Ok(v) => {
                    let cert = (!v.holds).then(|| format!("missing: {}", v.missing.join("; ")));
                    o.push("left_exact", v.holds, format!("excision for {} = {} + {}", x.text, z.text, u.text), cert, t);
                }
                Err(e) => return hard(e),
            },
        }
        o
    }
}

fn scaled_text(s: &WdvvSolution) -> String {
    let mut rhs = String::new();
    for (c, b) in s.scaled_vector.iter().zip(&s.basis).filter(|(c, _)| !c.is_zero()) {
        let sep = match (rhs.is_empty(), c.is_negative()) {
            (true, false) => "",
            (true, true) => "-",
            (false, false) => " + ",
            (false, true) => " - ",
        };
        let _ = write!(rhs, "{sep}{}*{b}", c.abs());
    }
    if rhs.is_empty() {
        rhs.push('0');
    }
    format!("{}*{} = {rhs}", s.scaled_multiplier, s.unknown)
}

/// Executes declarations in source order. A hard error (a map that is not
/// well defined, a ledger contradiction) stops the run unless
/// `keep_going` is set; failed checks never do.
pub fn run(program: &Program, config: &Config) -> Report {
    let start = Instant::now();
    let mut runner = Runner { config, maps: BTreeMap::new(), ledger: Ledger::new() };
    let mut declarations = Vec::new();
    let mut halted_at = None;
    for (index, item) in program.items.iter().enumerate() {
        let t = Instant::now();
        let o = if config.trace_gb {
            let label = format!("line {}", item.line);
            crate::groebner::with_trace(move |l| eprintln!("[gb {label}] {l}"), || runner.step(item))
        } else {
            runner.step(item)
        };
        let passed = !o.checks.is_empty() && o.checks.iter().all(|c| c.passed);
        declarations.push(DeclRecord {
            index,
            line: item.line,
            kind: item.kind.to_string(),
            name: item.name.clone(),
            passed,
            checks: o.checks,
            data: o.data,
            elapsed_us: t.elapsed().as_micros() as u64,
        });
        if o.hard && !config.keep_going {
            halted_at = Some(index);
            break;
        }
    }
    let passed = halted_at.is_none() && declarations.iter().all(|d| d.passed);
    Report {
        engine: ENGINE.to_string(),
        config: config.clone(),
        passed,
        halted_at,
        declarations,
        elapsed_us: start.elapsed().as_micros() as u64,
    }
}

/// Parse, check and run.
pub fn run_text(text: &str, config: &Config) -> Result<Report, DslError> {
    let program = check(&parse(text)?)?;
    Ok(run(&program, config))
}
