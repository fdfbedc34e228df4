use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;

use super::*;
use crate::ledger::AxiomKey;
use crate::paperdata::WdvvSystem;
use crate::patch::{Assertion, ExciseStep, PatchStep};
use crate::poly::{Ctx, PolyError, Polynomial, VarContext};
use crate::rings::{PresentedRing, SurjectivityWitness};

#[derive(Clone, Debug)]
pub(crate) struct WdvvBlock {
    pub system: WdvvSystem,
    pub solve: Vec<usize>,
    pub expects: Vec<(Polynomial, Polynomial)>,
}

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Ring { ring: Arc<PresentedRing>, provenance: Option<String> },
    Map { source: Arc<PresentedRing>, target: Arc<PresentedRing>, images: Vec<Polynomial> },
    Patch(Box<PatchStep>),
    Excise(Box<ExciseStep>),
    Wdvv(Box<WdvvBlock>),
    Ledger(LedgerCmd),
    IdealEq { ring: Arc<PresentedRing>, left: Vec<Polynomial>, right: Vec<Polynomial> },
    Graded { ring: Arc<PresentedRing>, degree: u32, rank: usize, torsion: Vec<BigInt> },
    Nzd { ring: Arc<PresentedRing>, poly: Polynomial },
    Surjective { map: String, witness: SurjectivityWitness },
    Image { map: String, source: Polynomial, target: Polynomial },
    Note(String),
}

#[derive(Clone, Debug)]
pub(crate) struct Item {
    pub line: usize,
    pub kind: &'static str,
    pub name: String,
    pub op: Op,
}

/// A scenario with every name resolved and every polynomial built.
#[derive(Clone, Debug)]
pub struct Program {
    pub(crate) items: Vec<Item>,
    rings: BTreeMap<String, Arc<PresentedRing>>,
}

impl Program {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ring(&self, name: &str) -> Option<&Arc<PresentedRing>> {
        self.rings.get(name)
    }

    pub fn patch_step(&self, name: &str) -> Option<&PatchStep> {
        self.items.iter().find_map(|it| match &it.op {
            Op::Patch(s) if s.name == name => Some(&**s),
            _ => None,
        })
    }

    pub fn excise_step(&self, name: &str) -> Option<&ExciseStep> {
        self.items.iter().find_map(|it| match &it.op {
            Op::Excise(s) if s.name == name => Some(&**s),
            _ => None,
        })
    }

    pub fn wdvv_system(&self) -> Option<&WdvvSystem> {
        self.items.iter().find_map(|it| match &it.op {
            Op::Wdvv(b) => Some(&b.system),
            _ => None,
        })
    }
}

type SResult<T> = Result<T, DslError>;

struct Checker {
    names: BTreeSet<String>,
    rings: BTreeMap<String, Arc<PresentedRing>>,
    maps: BTreeMap<String, (Arc<PresentedRing>, Arc<PresentedRing>)>,
    nodes: BTreeSet<String>,
}

fn eval(e: &Expr, ctx: &Ctx, ring: &str) -> SResult<Polynomial> {
    e.expr.eval(ctx).map_err(|err| match err {
        PolyError::UnknownVariable { name, line, col } => DslError::Semantic {
            line,
            col,
            msg: format!("unknown name `{name}`: not a generator of `{ring}`"),
        },
        other => DslError::semantic(e.pos, other.to_string()),
    })
}

fn homogeneous(e: &Expr, ctx: &Ctx, ring: &str) -> SResult<Polynomial> {
    let f = eval(e, ctx, ring)?;
    if !f.is_homogeneous() {
        return Err(DslError::semantic(e.pos, format!("degree mismatch: `{}` is not homogeneous", e.expr)));
    }
    Ok(f)
}

fn of_degree(e: &Expr, ctx: &Ctx, ring: &str, degree: u32) -> SResult<Polynomial> {
    let f = homogeneous(e, ctx, ring)?;
    if f.is_zero() {
        return Ok(f);
    }
    match f.homogeneous_degree() {
        Some(d) if d != degree => Err(DslError::semantic(
            e.pos,
            format!("degree mismatch: `{}` has degree {d}, expected {degree}", e.expr),
        )),
        _ => Ok(f),
    }
}

fn context(name: &Name, gens: &[GenDecl]) -> SResult<Ctx> {
    let mut seen = BTreeSet::new();
    for g in gens {
        if !seen.insert(&g.var.text) {
            return Err(DslError::semantic(g.var.pos, format!("generator `{}` declared twice", g.var.text)));
        }
        if g.degree == 0 {
            return Err(DslError::semantic(g.var.pos, format!("generator `{}` needs a positive degree", g.var.text)));
        }
    }
    let vars: Vec<(&str, u32)> = gens.iter().map(|g| (g.var.text.as_str(), g.degree)).collect();
    VarContext::new(name.text.clone(), &vars).map_err(|e| DslError::semantic(name.pos, e.to_string()))
}

/// Images for every generator of `source`, each of that generator's degree
/// in `target`.
fn images(at: Pos, assigns: &[Assign], source: &Ctx, target: &Ctx, target_name: &str) -> SResult<Vec<Polynomial>> {
    let mut out: Vec<Option<Polynomial>> = vec![None; source.nvars()];
    for a in assigns {
        let Some(i) = source.index_of(&a.var.text) else {
            return Err(DslError::semantic(a.var.pos, format!("`{}` is not a generator of `{}`", a.var.text, source.name())));
        };
        if out[i].is_some() {
            return Err(DslError::semantic(a.var.pos, format!("second image for `{}`", a.var.text)));
        }
        out[i] = Some(of_degree(&a.value, target, target_name, source.weight(i))?);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| DslError::semantic(at, format!("no image for generator `{}`", source.var_name(i)))))
        .collect()
}

fn witness(assigns: &[Assign], source: &Ctx, target: &Ctx) -> SResult<SurjectivityWitness> {
    let mut preimages = Vec::new();
    for a in assigns {
        let Some(i) = target.index_of(&a.var.text) else {
            return Err(DslError::semantic(a.var.pos, format!("`{}` is not a generator of `{}`", a.var.text, target.name())));
        };
        preimages.push((a.var.text.clone(), of_degree(&a.value, source, source.name(), target.weight(i))?));
    }
    Ok(SurjectivityWitness { preimages })
}

fn once<T>(slot: &mut Option<T>, value: T, pos: Pos, what: &str) -> SResult<()> {
    if slot.is_some() {
        return Err(DslError::semantic(pos, format!("`{what}` given twice")));
    }
    *slot = Some(value);
    Ok(())
}

fn required<T>(slot: Option<T>, pos: Pos, what: &str, block: &str) -> SResult<T> {
    slot.ok_or_else(|| DslError::semantic(pos, format!("{block} is missing `{what}`")))
}

fn membership(m: &MembershipItem, ctx: &Ctx, ring: &str) -> SResult<Assertion> {
    Ok(Assertion { poly: homogeneous(&m.poly, ctx, ring)?, kind: m.kind, provenance: m.provenance.clone() })
}

impl Checker {
    fn declare(&mut self, name: &Name) -> SResult<()> {
        if !self.names.insert(name.text.clone()) {
            return Err(DslError::semantic(name.pos, format!("`{}` is already declared", name.text)));
        }
        Ok(())
    }

    fn ring(&self, name: &Name) -> SResult<Arc<PresentedRing>> {
        self.rings
            .get(&name.text)
            .cloned()
            .ok_or_else(|| DslError::semantic(name.pos, format!("unknown ring `{}`", name.text)))
    }

    fn map(&self, name: &Name) -> SResult<(Arc<PresentedRing>, Arc<PresentedRing>)> {
        self.maps
            .get(&name.text)
            .cloned()
            .ok_or_else(|| DslError::semantic(name.pos, format!("unknown map `{}`", name.text)))
    }

    fn node(&self, name: &Name) -> SResult<()> {
        if self.nodes.contains(&name.text) {
            Ok(())
        } else {
            Err(DslError::semantic(name.pos, format!("unknown ledger node `{}`", name.text)))
        }
    }

    fn register(&mut self, name: &Name, ctx: &Ctx, relations: Vec<Polynomial>, exprs: &[Expr]) -> SResult<Arc<PresentedRing>> {
        let ring = PresentedRing::new(name.text.clone(), ctx, relations).map_err(|e| {
            let pos = exprs.first().map_or(name.pos, |e| e.pos);
            DslError::semantic(pos, e.to_string())
        })?;
        let ring = Arc::new(ring);
        self.rings.insert(name.text.clone(), ring.clone());
        Ok(ring)
    }

    fn item(&mut self, d: &Declaration) -> SResult<(String, Op)> {
        Ok(match &d.decl {
            Decl::Ring { name, gens, relations, provenance } => {
                self.declare(name)?;
                let ctx = context(name, gens)?;
                let rels = relations.iter().map(|e| homogeneous(e, &ctx, &name.text)).collect::<SResult<Vec<_>>>()?;
                let ring = self.register(name, &ctx, rels, relations)?;
                (name.text.clone(), Op::Ring { ring, provenance: provenance.clone() })
            }
            Decl::Map { name, source, target, images: assigns } => {
                self.declare(name)?;
                let (s, t) = (self.ring(source)?, self.ring(target)?);
                let ims = images(name.pos, assigns, s.ctx(), t.ctx(), t.name())?;
                self.maps.insert(name.text.clone(), (s.clone(), t.clone()));
                (name.text.clone(), Op::Map { source: s, target: t, images: ims })
            }
            Decl::Patch { name, items } => {
                self.declare(name)?;
                let step = self.patch(name, items)?;
                let claimed = step.claimed.clone();
                self.register(name, &step.candidate, claimed, &[])?;
                (name.text.clone(), Op::Patch(Box::new(step)))
            }
            Decl::Excise { name, items } => {
                self.declare(name)?;
                let step = self.excise(name, items)?;
                self.register(name, &step.before.ctx().clone(), step.claimed.clone(), &[])?;
                (name.text.clone(), Op::Excise(Box::new(step)))
            }
            Decl::Wdvv { name, items } => {
                if let Some(n) = name {
                    self.declare(n)?;
                }
                let block = self.wdvv(d.pos, items)?;
                (name.as_ref().map_or("wdvv".to_string(), |n| n.text.clone()), Op::Wdvv(Box::new(block)))
            }
            Decl::Ledger(cmd) => (self.ledger(cmd)?, Op::Ledger(cmd.clone())),
            Decl::Assert(a) => self.assertion(a)?,
            Decl::Note(s) => (String::new(), Op::Note(s.clone())),
        })
    }

    fn patch(&self, name: &Name, items: &[PatchItem]) -> SResult<PatchStep> {
        let (mut open, mut closed, mut ctop, mut gens, mut j, mut p, mut class_z, mut annpre, mut claim) =
            (None, None, None, None, None, None, None, None, None);
        let mut asserts = Vec::new();
        for it in items {
            match it {
                PatchItem::Open(n) => once(&mut open, n, n.pos, "open")?,
                PatchItem::Closed(n) => once(&mut closed, n, n.pos, "closed")?,
                PatchItem::Ctop(e) => once(&mut ctop, e, e.pos, "ctop")?,
                PatchItem::Gens(g) => once(&mut gens, g, name.pos, "gens")?,
                PatchItem::J(a) => once(&mut j, a, name.pos, "j")?,
                PatchItem::P(a) => once(&mut p, a, name.pos, "p")?,
                PatchItem::ClassZ(e) => once(&mut class_z, e, e.pos, "classZ")?,
                PatchItem::AnnPre(a) => once(&mut annpre, a, name.pos, "annpre")?,
                PatchItem::Claim(c) => once(&mut claim, c, name.pos, "claim")?,
                PatchItem::Assert(m) => asserts.push(m),
            }
        }
        let block = format!("patch `{}`", name.text);
        let open = self.ring(required(open, name.pos, "open", &block)?)?;
        let closed = self.ring(required(closed, name.pos, "closed", &block)?)?;
        let candidate = context(name, required(gens, name.pos, "gens", &block)?)?;
        let j_images = images(name.pos, required(j, name.pos, "j", &block)?, &candidate, open.ctx(), open.name())?;
        let p_images = images(name.pos, required(p, name.pos, "p", &block)?, &candidate, closed.ctx(), closed.name())?;
        let ctop = homogeneous(required(ctop, name.pos, "ctop", &block)?, closed.ctx(), closed.name())?;
        let class_of_z = homogeneous(required(class_z, name.pos, "classZ", &block)?, &candidate, &name.text)?;
        let mut annihilator_preimages = Vec::new();
        for (a, eta) in annpre.map(|v| v.as_slice()).unwrap_or(&[]) {
            let ap = homogeneous(a, closed.ctx(), closed.name())?;
            let ep = match ap.homogeneous_degree() {
                Some(d) => of_degree(eta, &candidate, &name.text, d)?,
                None => homogeneous(eta, &candidate, &name.text)?,
            };
            annihilator_preimages.push((ap, ep));
        }
        let claimed = required(claim, name.pos, "claim", &block)?
            .iter()
            .map(|e| homogeneous(e, &candidate, &name.text))
            .collect::<SResult<Vec<_>>>()?;
        let assertions = asserts.iter().map(|m| membership(m, &candidate, &name.text)).collect::<SResult<Vec<_>>>()?;
        Ok(PatchStep {
            name: name.text.clone(),
            open,
            closed,
            ctop,
            candidate,
            j_images,
            p_images,
            class_of_z,
            annihilator_preimages,
            claimed,
            assertions,
        })
    }

    fn excise(&self, name: &Name, items: &[ExciseItem]) -> SResult<ExciseStep> {
        let (mut ring, mut class, mut claim, mut wit) = (None, None, None, None);
        let mut asserts = Vec::new();
        for it in items {
            match it {
                ExciseItem::Ring(n) => once(&mut ring, n, n.pos, "ring")?,
                ExciseItem::Class(c) => once(&mut class, c, name.pos, "class")?,
                ExciseItem::Claim(c) => once(&mut claim, c, name.pos, "claim")?,
                ExciseItem::Witness(w) => once(&mut wit, w, name.pos, "witness")?,
                ExciseItem::Assert(m) => asserts.push(m),
            }
        }
        let block = format!("excise `{}`", name.text);
        let before = self.ring(required(ring, name.pos, "ring", &block)?)?;
        let ctx = before.ctx().clone();
        let list = |es: &[Expr]| es.iter().map(|e| homogeneous(e, &ctx, before.name())).collect::<SResult<Vec<_>>>();
        let classes = list(required(class, name.pos, "class", &block)?)?;
        let claimed = list(required(claim, name.pos, "claim", &block)?)?;
        let witness = wit.map(|w| witness(w, &ctx, &ctx)).transpose()?;
        let assertions = asserts.iter().map(|m| membership(m, &ctx, before.name())).collect::<SResult<Vec<_>>>()?;
        Ok(ExciseStep { name: name.text.clone(), before, classes, claimed, witness, assertions })
    }

    fn wdvv(&self, pos: Pos, items: &[WdvvItem]) -> SResult<WdvvBlock> {
        let mut unknowns: Option<&Vec<Name>> = None;
        for it in items {
            if let WdvvItem::Unknowns(ns) = it {
                once(&mut unknowns, ns, ns[0].pos, "unknowns")?;
            }
        }
        let unknowns = required(unknowns, pos, "unknowns", "wdvv block")?;
        let mut vars: Vec<String> = Vec::new();
        for u in unknowns {
            if vars.contains(&u.text) {
                return Err(DslError::semantic(u.pos, format!("unknown `{}` listed twice", u.text)));
            }
            vars.push(u.text.clone());
        }
        for it in items {
            let exprs: Vec<&Expr> = match it {
                WdvvItem::Eq(a, b) | WdvvItem::Expect(a, Some(b)) => vec![a, b],
                WdvvItem::Expect(a, None) => vec![a],
                _ => vec![],
            };
            for e in exprs {
                for (id, _) in e.expr.identifiers() {
                    if !vars.contains(&id) {
                        vars.push(id);
                    }
                }
            }
        }
        let weighted: Vec<(&str, u32)> = vars.iter().map(|v| (v.as_str(), 1)).collect();
        let ctx = VarContext::new("wdvv", &weighted).map_err(|e| DslError::semantic(pos, e.to_string()))?;
        let mut eqs = Vec::new();
        let mut expects = Vec::new();
        let mut solve = Vec::new();
        for it in items {
            match it {
                WdvvItem::Eq(a, b) => eqs.push((eval(a, &ctx, "wdvv")?, eval(b, &ctx, "wdvv")?)),
                WdvvItem::Expect(a, b) => {
                    let rhs = match b {
                        Some(b) => eval(b, &ctx, "wdvv")?,
                        None => Polynomial::zero(&ctx),
                    };
                    expects.push((eval(a, &ctx, "wdvv")?, rhs));
                }
                WdvvItem::Solve(n) => match unknowns.iter().position(|u| u.text == n.text) {
                    Some(k) => solve.push(k),
                    None => return Err(DslError::semantic(n.pos, format!("`{}` is not an unknown", n.text))),
                },
                WdvvItem::Unknowns(_) => {}
            }
        }
        let names: Vec<&str> = unknowns.iter().map(|u| u.text.as_str()).collect();
        let system = WdvvSystem::from_equations(&ctx, &names, &eqs).map_err(|e| DslError::semantic(pos, e.to_string()))?;
        for (l, r) in &expects {
            system.implies(l, r).map_err(|e| DslError::semantic(pos, e.to_string()))?;
        }
        Ok(WdvvBlock { system, solve, expects })
    }

    fn ledger(&mut self, cmd: &LedgerCmd) -> SResult<String> {
        let ells_ok = |ells: &[u32], at: Pos| -> SResult<()> {
            match ells.iter().find(|&&l| l < 2) {
                Some(l) => Err(DslError::semantic(at, format!("l={l} is not a prime power index"))),
                None => Ok(()),
            }
        };
        Ok(match cmd {
            LedgerCmd::Node(n) => {
                if !self.nodes.insert(n.text.clone()) {
                    return Err(DslError::semantic(n.pos, format!("ledger node `{}` already declared", n.text)));
                }
                n.text.clone()
            }
            LedgerCmd::Axiom { node, key, .. } => {
                if AxiomKey::parse(&key.text).is_none() {
                    return Err(DslError::semantic(key.pos, format!("unknown axiom key `{}`", key.text)));
                }
                self.nodes.insert(node.text.clone());
                format!("{}.{}", node.text, key.text)
            }
            LedgerCmd::Edge { x, z, u } => {
                for n in [x, z, u] {
                    self.node(n)?;
                }
                format!("{} = {} + {}", x.text, z.text, u.text)
            }
            LedgerCmd::Derive { node, ells } => {
                self.node(node)?;
                ells_ok(ells, node.pos)?;
                node.text.clone()
            }
            LedgerCmd::Exact { x, z, u, ells } => {
                for n in [x, z, u] {
                    self.node(n)?;
                }
                ells_ok(ells, x.pos)?;
                format!("{} = {} + {}", x.text, z.text, u.text)
            }
        })
    }

    fn assertion(&self, a: &AssertCmd) -> SResult<(String, Op)> {
        Ok(match a {
            AssertCmd::IdealEq { left, right, ring } => {
                let r = self.ring(ring)?;
                let list = |es: &[Expr]| es.iter().map(|e| homogeneous(e, r.ctx(), r.name())).collect::<SResult<Vec<_>>>();
                let (left, right) = (list(left)?, list(right)?);
                (ring.text.clone(), Op::IdealEq { ring: r, left, right })
            }
            AssertCmd::Graded { ring, degree, rank, torsion } => {
                let r = self.ring(ring)?;
                let torsion = torsion.iter().map(|&t| BigInt::from(t)).collect();
                (ring.text.clone(), Op::Graded { ring: r, degree: *degree, rank: *rank, torsion })
            }
            AssertCmd::Nzd { poly, ring } => {
                let r = self.ring(ring)?;
                let poly = homogeneous(poly, r.ctx(), r.name())?;
                (ring.text.clone(), Op::Nzd { ring: r, poly })
            }
            AssertCmd::Surjective { map, witness: w } => {
                let (s, t) = self.map(map)?;
                let witness = witness(w, s.ctx(), t.ctx())?;
                (map.text.clone(), Op::Surjective { map: map.text.clone(), witness })
            }
            AssertCmd::Image { map, source, target } => {
                let (s, t) = self.map(map)?;
                let source = homogeneous(source, s.ctx(), s.name())?;
                let target = homogeneous(target, t.ctx(), t.name())?;
                (map.text.clone(), Op::Image { map: map.text.clone(), source, target })
            }
        })
    }
}

/// Resolves names and builds rings, maps and steps. Names must be declared
/// before use and at most once.
pub fn check(s: &Scenario) -> Result<Program, DslError> {
    let mut c = Checker { names: BTreeSet::new(), rings: BTreeMap::new(), maps: BTreeMap::new(), nodes: BTreeSet::new() };
    let mut items = Vec::new();
    for d in &s.declarations {
        let (name, op) = c.item(d)?;
        items.push(Item { line: d.pos.line, kind: d.kind(), name, op });
    }
    Ok(Program { items, rings: c.rings })
}
