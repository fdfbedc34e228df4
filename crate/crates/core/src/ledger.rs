//! Vanishing bookkeeping for first higher Chow groups with ℓ-adic
//! coefficients over a stratification.
//!
//! Each node carries a three-valued flag per ℓ and a set of named axioms.
//! Axiom keys: `fg` (Chow ring finitely generated), `bci` (injective base
//! change to the algebraic closure), `pfi` (pushforward into the ambient
//! stack injective), `vanishN`, `nonvanishN`, `torsionN` (Chow ring has
//! N-torsion).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Unknown,
    True,
    False,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxiomKey {
    FinitelyGenerated,
    BaseChangeInjective,
    PushforwardInjective,
    Vanishing(u32),
    NonVanishing(u32),
    Torsion(u32),
}

impl AxiomKey {
    pub fn parse(s: &str) -> Option<AxiomKey> {
        let num = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.parse::<u32>().ok()).filter(|&l| l >= 2);
        match s {
            "fg" => Some(AxiomKey::FinitelyGenerated),
            "bci" => Some(AxiomKey::BaseChangeInjective),
            "pfi" => Some(AxiomKey::PushforwardInjective),
            _ => num("vanish")
                .map(AxiomKey::Vanishing)
                .or_else(|| num("nonvanish").map(AxiomKey::NonVanishing))
                .or_else(|| num("torsion").map(AxiomKey::Torsion)),
        }
    }
}

impl fmt::Display for AxiomKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomKey::FinitelyGenerated => write!(f, "fg"),
            AxiomKey::BaseChangeInjective => write!(f, "bci"),
            AxiomKey::PushforwardInjective => write!(f, "pfi"),
            AxiomKey::Vanishing(l) => write!(f, "vanish{l}"),
            AxiomKey::NonVanishing(l) => write!(f, "nonvanish{l}"),
            AxiomKey::Torsion(l) => write!(f, "torsion{l}"),
        }
    }
}

impl Serialize for AxiomKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("unknown ledger node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` already declared")]
    DuplicateNode(String),
    #[error("unknown axiom key `{0}`")]
    UnknownKey(String),
    #[error("axiom `{key}` on `{node}` needs a provenance string")]
    MissingProvenance { node: String, key: String },
    #[error("contradiction at `{node}` for l={ell}: flag is already {existing:?}")]
    Contradiction { node: String, ell: u32, existing: Flag },
    #[error("hypothesis unavailable: {}", .0.join(", "))]
    MissingHypotheses(Vec<String>),
    #[error("no derivation of the vanishing at `{node}` for l={ell}")]
    Underivable { node: String, ell: u32 },
    #[error("edge {0} does not exist")]
    UnknownEdge(usize),
}

#[derive(Clone, Debug, Default)]
pub struct StratumNode {
    pub name: String,
    pub flags: BTreeMap<u32, Flag>,
    pub axioms: BTreeMap<AxiomKey, String>,
}

impl StratumNode {
    pub fn flag(&self, ell: u32) -> Flag {
        self.flags.get(&ell).copied().unwrap_or(Flag::Unknown)
    }

    fn has(&self, key: &AxiomKey) -> bool {
        self.axioms.contains_key(key)
    }
}

/// `z` closed in `x` with open complement `u`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatchEdge {
    pub x: String,
    pub z: String,
    pub u: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Closure,
    Open,
}

/// One used hypothesis axiom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, PartialOrd, Ord)]
pub struct UsedAxiom {
    pub node: String,
    pub key: String,
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "by", rename_all = "lowercase")]
pub enum Derivation {
    Axiom {
        node: String,
        ell: u32,
        provenance: String,
    },
    Closure {
        node: String,
        ell: u32,
        edge: usize,
        hypotheses: Vec<UsedAxiom>,
        closed: Box<Derivation>,
        open: Box<Derivation>,
    },
    Open {
        node: String,
        ell: u32,
        edge: usize,
        hypotheses: Vec<UsedAxiom>,
        ambient: Box<Derivation>,
    },
}

impl Derivation {
    pub fn node(&self) -> &str {
        match self {
            Derivation::Axiom { node, .. } | Derivation::Closure { node, .. } | Derivation::Open { node, .. } => node,
        }
    }

    /// Every axiom the tree rests on, as `(node, key)` pairs.
    pub fn leaves(&self) -> BTreeSet<(String, AxiomKey)> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<(String, AxiomKey)>) {
        let hyp = |hs: &[UsedAxiom], out: &mut BTreeSet<(String, AxiomKey)>| {
            for h in hs {
                out.insert((h.node.clone(), AxiomKey::parse(&h.key).expect("recorded keys parse")));
            }
        };
        match self {
            Derivation::Axiom { node, ell, .. } => {
                out.insert((node.clone(), AxiomKey::Vanishing(*ell)));
            }
            Derivation::Closure { hypotheses, closed, open, .. } => {
                hyp(hypotheses, out);
                closed.collect(out);
                open.collect(out);
            }
            Derivation::Open { hypotheses, ambient, .. } => {
                hyp(hypotheses, out);
                ambient.collect(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Derivation::Axiom { .. } => 1,
            Derivation::Closure { closed, open, .. } => 1 + closed.depth().max(open.depth()),
            Derivation::Open { ambient, .. } => 1 + ambient.depth(),
        }
    }
}

/// Outcome of the left-exactness test for one edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LeftExactness {
    pub holds: bool,
    pub missing: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct Ledger {
    order: Vec<String>,
    nodes: BTreeMap<String, StratumNode>,
    edges: Vec<PatchEdge>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str) -> Result<(), LedgerError> {
        if self.nodes.contains_key(name) {
            return Err(LedgerError::DuplicateNode(name.to_string()));
        }
        self.order.push(name.to_string());
        self.nodes.insert(name.to_string(), StratumNode { name: name.to_string(), ..Default::default() });
        Ok(())
    }

    fn ensure_node(&mut self, name: &str) {
        if !self.nodes.contains_key(name) {
            self.add_node(name).expect("fresh node");
        }
    }

    pub fn node(&self, name: &str) -> Result<&StratumNode, LedgerError> {
        self.nodes.get(name).ok_or_else(|| LedgerError::UnknownNode(name.to_string()))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &StratumNode> {
        self.order.iter().map(|n| &self.nodes[n])
    }

    pub fn edges(&self) -> &[PatchEdge] {
        &self.edges
    }

    pub fn flag(&self, node: &str, ell: u32) -> Result<Flag, LedgerError> {
        Ok(self.node(node)?.flag(ell))
    }

    fn set_flag(&mut self, node: &str, ell: u32, value: Flag) -> Result<(), LedgerError> {
        let n = self.nodes.get_mut(node).ok_or_else(|| LedgerError::UnknownNode(node.to_string()))?;
        match n.flag(ell) {
            Flag::Unknown => {
                n.flags.insert(ell, value);
                Ok(())
            }
            existing if existing == value => Ok(()),
            existing => Err(LedgerError::Contradiction { node: node.to_string(), ell, existing }),
        }
    }

    /// Records an axiom, creating the node on first mention. Vanishing
    /// axioms set the flag directly.
    pub fn add_axiom(&mut self, node: &str, key: &str, provenance: &str) -> Result<(), LedgerError> {
        let k = AxiomKey::parse(key).ok_or_else(|| LedgerError::UnknownKey(key.to_string()))?;
        if provenance.trim().is_empty() {
            return Err(LedgerError::MissingProvenance { node: node.to_string(), key: key.to_string() });
        }
        self.ensure_node(node);
        match k {
            AxiomKey::Vanishing(l) => self.set_flag(node, l, Flag::True)?,
            AxiomKey::NonVanishing(l) => self.set_flag(node, l, Flag::False)?,
            _ => {}
        }
        self.nodes.get_mut(node).unwrap().axioms.insert(k, provenance.to_string());
        Ok(())
    }

    pub fn remove_axiom(&mut self, node: &str, key: &AxiomKey) -> bool {
        self.nodes.get_mut(node).is_some_and(|n| n.axioms.remove(key).is_some())
    }

    pub fn add_edge(&mut self, x: &str, z: &str, u: &str) -> Result<usize, LedgerError> {
        for n in [x, z, u] {
            self.node(n)?;
        }
        self.edges.push(PatchEdge { x: x.to_string(), z: z.to_string(), u: u.to_string() });
        Ok(self.edges.len() - 1)
    }

    fn edge(&self, i: usize) -> Result<&PatchEdge, LedgerError> {
        self.edges.get(i).ok_or(LedgerError::UnknownEdge(i))
    }

    fn need(&self, node: &str, key: AxiomKey, missing: &mut Vec<String>, used: &mut Vec<UsedAxiom>) {
        match self.nodes.get(node).and_then(|n| n.axioms.get(&key)) {
            Some(prov) => used.push(UsedAxiom { node: node.to_string(), key: key.to_string(), provenance: prov.clone() }),
            None => missing.push(format!("{key} on {node}")),
        }
    }

    fn rule_hypotheses(&self, e: &PatchEdge, rule: Rule) -> Result<Vec<UsedAxiom>, Vec<String>> {
        let mut missing = Vec::new();
        let mut used = Vec::new();
        self.need(&e.z, AxiomKey::FinitelyGenerated, &mut missing, &mut used);
        self.need(&e.u, AxiomKey::FinitelyGenerated, &mut missing, &mut used);
        self.need(&e.z, AxiomKey::BaseChangeInjective, &mut missing, &mut used);
        if rule == Rule::Open {
            self.need(&e.z, AxiomKey::PushforwardInjective, &mut missing, &mut used);
        }
        if missing.is_empty() {
            Ok(used)
        } else {
            Err(missing)
        }
    }

    /// Vanishing on the closed piece and the complement gives vanishing on
    /// the union.
    pub fn apply_closure_rule(&mut self, edge: usize, ell: u32) -> Result<Vec<UsedAxiom>, LedgerError> {
        let e = self.edge(edge)?.clone();
        let mut missing = match self.rule_hypotheses(&e, Rule::Closure) {
            Ok(_) => Vec::new(),
            Err(m) => m,
        };
        for n in [&e.z, &e.u] {
            if self.flag(n, ell)? != Flag::True {
                missing.push(format!("vanishing on {n} for l={ell}"));
            }
        }
        if !missing.is_empty() {
            return Err(LedgerError::MissingHypotheses(missing));
        }
        let used = self.rule_hypotheses(&e, Rule::Closure).unwrap();
        self.set_flag(&e.x, ell, Flag::True)?;
        Ok(used)
    }

    /// Vanishing on the union plus an injective pushforward from the closed
    /// piece gives vanishing on the complement.
    pub fn apply_open_rule(&mut self, edge: usize, ell: u32) -> Result<Vec<UsedAxiom>, LedgerError> {
        let e = self.edge(edge)?.clone();
        let mut missing = match self.rule_hypotheses(&e, Rule::Open) {
            Ok(_) => Vec::new(),
            Err(m) => m,
        };
        if self.flag(&e.x, ell)? != Flag::True {
            missing.push(format!("vanishing on {} for l={ell}", e.x));
        }
        if !missing.is_empty() {
            return Err(LedgerError::MissingHypotheses(missing));
        }
        let used = self.rule_hypotheses(&e, Rule::Open).unwrap();
        self.set_flag(&e.u, ell, Flag::True)?;
        Ok(used)
    }

    /// Backward search for a derivation of vanishing at `node`, trying
    /// edges in declaration order. Flags along the tree are set on success.
    pub fn derive(&mut self, node: &str, ell: u32) -> Result<Derivation, LedgerError> {
        self.node(node)?;
        let mut visiting = BTreeSet::new();
        let d = self.search(node, ell, &mut visiting).ok_or_else(|| LedgerError::Underivable { node: node.to_string(), ell })?;
        self.replay(&d)?;
        Ok(d)
    }

    fn search(&self, node: &str, ell: u32, visiting: &mut BTreeSet<String>) -> Option<Derivation> {
        let n = self.nodes.get(node)?;
        if n.flag(ell) == Flag::False {
            return None;
        }
        if let Some(prov) = n.axioms.get(&AxiomKey::Vanishing(ell)) {
            return Some(Derivation::Axiom { node: node.to_string(), ell, provenance: prov.clone() });
        }
        if !visiting.insert(node.to_string()) {
            return None;
        }
        let mut found = None;
        for (i, e) in self.edges.iter().enumerate() {
            if e.x == node {
                let Ok(hypotheses) = self.rule_hypotheses(e, Rule::Closure) else { continue };
                let Some(closed) = self.search(&e.z, ell, visiting) else { continue };
                let Some(open) = self.search(&e.u, ell, visiting) else { continue };
                found = Some(Derivation::Closure {
                    node: node.to_string(),
                    ell,
                    edge: i,
                    hypotheses,
                    closed: Box::new(closed),
                    open: Box::new(open),
                });
                break;
            }
            if e.u == node {
                let Ok(hypotheses) = self.rule_hypotheses(e, Rule::Open) else { continue };
                let Some(ambient) = self.search(&e.x, ell, visiting) else { continue };
                found = Some(Derivation::Open { node: node.to_string(), ell, edge: i, hypotheses, ambient: Box::new(ambient) });
                break;
            }
        }
        visiting.remove(node);
        found
    }

    /// Re-applies a derivation bottom-up, failing if any step no longer
    /// holds.
    pub fn replay(&mut self, d: &Derivation) -> Result<(), LedgerError> {
        match d {
            Derivation::Axiom { node, ell, .. } => {
                if self.node(node)?.has(&AxiomKey::Vanishing(*ell)) {
                    Ok(())
                } else {
                    Err(LedgerError::MissingHypotheses(vec![format!("vanish{ell} on {node}")]))
                }
            }
            Derivation::Closure { ell, edge, closed, open, .. } => {
                self.replay(closed)?;
                self.replay(open)?;
                self.apply_closure_rule(*edge, *ell).map(|_| ())
            }
            Derivation::Open { ell, edge, ambient, .. } => {
                self.replay(ambient)?;
                self.apply_open_rule(*edge, *ell).map(|_| ())
            }
        }
    }

    /// A copy with every flag reset to what the axioms alone give.
    pub fn axioms_only(&self) -> Ledger {
        let mut out = Ledger::new();
        for name in &self.order {
            out.add_node(name).unwrap();
            for (k, prov) in &self.nodes[name].axioms {
                out.add_axiom(name, &k.to_string(), prov).expect("axioms were consistent");
            }
        }
        out.edges = self.edges.clone();
        out
    }

    /// For each leaf axiom of `d`, whether removing it makes `node`
    /// underivable. Every entry should be `true`.
    pub fn minimality(&self, node: &str, ell: u32, d: &Derivation) -> Vec<((String, AxiomKey), bool)> {
        d.leaves()
            .into_iter()
            .map(|leaf| {
                let mut l = self.axioms_only();
                l.remove_axiom(&leaf.0, &leaf.1);
                if let AxiomKey::Vanishing(x) = leaf.1 {
                    l.nodes.get_mut(&leaf.0).unwrap().flags.remove(&x);
                }
                let broken = l.derive(node, ell).is_err();
                (leaf, broken)
            })
            .collect()
    }

    /// The hypotheses under which the excision sequence for `x = z ∪ u` is
    /// exact on the left, given the current flags.
    pub fn check_left_exactness(&self, x: &str, z: &str, u: &str, ells: &[u32]) -> Result<LeftExactness, LedgerError> {
        for n in [x, z, u] {
            self.node(n)?;
        }
        let e = PatchEdge { x: x.to_string(), z: z.to_string(), u: u.to_string() };
        let mut missing = match self.rule_hypotheses(&e, Rule::Closure) {
            Ok(_) => Vec::new(),
            Err(m) => m,
        };
        let un = self.node(u)?;
        if !ells.iter().any(|&l| un.flag(l) == Flag::True) {
            missing.push(format!("vanishing on {u} for some l in {ells:?}"));
        }
        for k in self.node(z)?.axioms.keys() {
            if let AxiomKey::Torsion(l) = k {
                if un.flag(*l) != Flag::True {
                    missing.push(format!("vanishing on {u} for l={l} ({z} has {l}-torsion)"));
                }
            }
        }
        Ok(LeftExactness { holds: missing.is_empty(), missing })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Ledger {
        let mut l = Ledger::new();
        for n in ["U", "Xi"] {
            l.add_axiom(n, "fg", "ring is presented").unwrap();
            l.add_axiom(n, "bci", "torus quotient").unwrap();
            l.add_axiom(n, "vanish2", "vector bundle over a point").unwrap();
            l.add_axiom(n, "vanish3", "vector bundle over a point").unwrap();
        }
        l.add_node("UXi").unwrap();
        l.add_edge("UXi", "Xi", "U").unwrap();
        l
    }

    #[test]
    fn closure_rule() {
        let mut l = base();
        let d = l.derive("UXi", 2).unwrap();
        assert_eq!(l.flag("UXi", 2).unwrap(), Flag::True);
        assert_eq!(l.flag("UXi", 3).unwrap(), Flag::Unknown);
        assert_eq!(d.depth(), 2);
        assert_eq!(d.leaves().len(), 5);
        assert!(l.minimality("UXi", 2, &d).iter().all(|(_, broken)| *broken));
    }

    #[test]
    fn missing_hypothesis_named() {
        let mut l = base();
        l.remove_axiom("Xi", &AxiomKey::BaseChangeInjective);
        match l.apply_closure_rule(0, 2) {
            Err(LedgerError::MissingHypotheses(m)) => assert_eq!(m, vec!["bci on Xi".to_string()]),
            other => panic!("{other:?}"),
        }
        let mut l = base();
        l.add_node("W").unwrap();
        let e = l.add_edge("W", "UXi", "U").unwrap();
        let err = l.apply_closure_rule(e, 2).unwrap_err();
        assert!(err.to_string().starts_with("hypothesis unavailable"), "{err}");
    }

    #[test]
    fn open_rule_needs_injectivity() {
        let mut l = Ledger::new();
        for n in ["Y", "C"] {
            l.add_axiom(n, "fg", "p").unwrap();
        }
        l.add_axiom("Y", "bci", "p").unwrap();
        l.add_axiom("X", "vanish2", "p").unwrap();
        l.add_edge("X", "Y", "C").unwrap();
        assert!(l.derive("C", 2).is_err());
        assert!(matches!(l.apply_open_rule(0, 2), Err(LedgerError::MissingHypotheses(_))));
        l.add_axiom("Y", "pfi", "multiplication by a nonzerodivisor").unwrap();
        let d = l.derive("C", 2).unwrap();
        assert!(matches!(d, Derivation::Open { .. }));
        assert_eq!(l.flag("C", 2).unwrap(), Flag::True);
    }

    #[test]
    fn contradictions_rejected() {
        let mut l = Ledger::new();
        l.add_axiom("A", "nonvanish2", "test").unwrap();
        assert!(matches!(l.add_axiom("A", "vanish2", "test"), Err(LedgerError::Contradiction { .. })));
        assert!(matches!(l.add_axiom("A", "fg", " "), Err(LedgerError::MissingProvenance { .. })));
        assert!(matches!(l.add_axiom("A", "vanish1", "x"), Err(LedgerError::UnknownKey(_))));
        assert!(matches!(l.add_edge("A", "B", "C"), Err(LedgerError::UnknownNode(_))));
    }

    #[test]
    fn false_flag_blocks_derivation() {
        let mut l = base();
        l.add_axiom("UXi", "nonvanish2", "injected").unwrap();
        assert!(l.derive("UXi", 2).is_err());
    }

    #[test]
    fn left_exactness() {
        let mut l = base();
        l.derive("UXi", 2).unwrap();
        l.derive("UXi", 3).unwrap();
        let v = l.check_left_exactness("UXi", "Xi", "U", &[2, 3]).unwrap();
        assert!(v.holds, "{v:?}");
        let mut m = base();
        m.remove_axiom("Xi", &AxiomKey::BaseChangeInjective);
        let v = m.check_left_exactness("UXi", "Xi", "U", &[2, 3]).unwrap();
        assert_eq!(v.missing, vec!["bci on Xi".to_string()]);

        let mut t = Ledger::new();
        for n in ["Z", "V"] {
            t.add_axiom(n, "fg", "p").unwrap();
        }
        t.add_axiom("Z", "bci", "p").unwrap();
        t.add_axiom("Z", "torsion2", "CH has 2-torsion").unwrap();
        t.add_axiom("V", "vanish3", "p").unwrap();
        t.add_node("W").unwrap();
        let v = t.check_left_exactness("W", "Z", "V", &[2, 3]).unwrap();
        assert!(!v.holds);
        assert_eq!(v.missing.len(), 1);
        assert!(v.missing[0].contains("l=2"));
    }

    #[test]
    fn derivation_serializes() {
        let mut l = base();
        let d = l.derive("UXi", 3).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.starts_with("{\"by\":\"closure\",\"node\":\"UXi\""), "{s}");
        let mut fresh = l.axioms_only();
        fresh.replay(&d).unwrap();
        assert_eq!(fresh.flag("UXi", 3).unwrap(), Flag::True);
    }
}
