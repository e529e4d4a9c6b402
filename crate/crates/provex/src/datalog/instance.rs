//! EDB instances, active domains and domain assignments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::{Literal, Program, Rule, Term};
use super::check::topological_order;
use crate::error::{Error, Result};

pub type Tuple = Vec<String>;

/// An attribute `R.A`, addressed by 0-based position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Attr {
    pub pred: String,
    pub pos: usize,
}

impl Attr {
    pub fn new(pred: impl Into<String>, pos: usize) -> Attr {
        Attr { pred: pred.into(), pos }
    }
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.pred, self.pos + 1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Relation {
    /// Attribute names; positional (`1`, `2`, ...) unless given.
    pub attrs: Vec<String>,
    pub tuples: BTreeSet<Tuple>,
    /// Tuples whose existence is undetermined; disjoint from `tuples`.
    pub undetermined: BTreeSet<Tuple>,
    pub annotations: BTreeMap<Tuple, String>,
}

impl Relation {
    pub fn with_arity(arity: usize) -> Relation {
        Relation { attrs: (1..=arity).map(|i| i.to_string()).collect(), ..Default::default() }
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Instance {
    pub relations: BTreeMap<String, Relation>,
}

impl Instance {
    pub fn new() -> Instance {
        Instance::default()
    }

    /// Declares a relation, keeping existing tuples.
    pub fn declare(&mut self, pred: &str, arity: usize) -> Result<&mut Relation> {
        let rel = self
            .relations
            .entry(pred.to_string())
            .or_insert_with(|| Relation::with_arity(arity));
        if rel.arity() != arity {
            return Err(Error::ArityMismatch { pred: pred.into(), expected: rel.arity(), found: arity });
        }
        Ok(rel)
    }

    pub fn insert<S: AsRef<str>>(&mut self, pred: &str, tuple: &[S]) -> Result<()> {
        let t = to_tuple(tuple);
        let rel = self.declare(pred, t.len())?;
        rel.undetermined.remove(&t);
        rel.tuples.insert(t);
        Ok(())
    }

    pub fn insert_annotated<S: AsRef<str>>(&mut self, pred: &str, tuple: &[S], annot: &str) -> Result<()> {
        self.insert(pred, tuple)?;
        self.annotate(pred, tuple, annot)
    }

    pub fn annotate<S: AsRef<str>>(&mut self, pred: &str, tuple: &[S], annot: &str) -> Result<()> {
        let t = to_tuple(tuple);
        self.declare(pred, t.len())?.annotations.insert(t, annot.to_string());
        Ok(())
    }

    pub fn insert_undetermined<S: AsRef<str>>(&mut self, pred: &str, tuple: &[S]) -> Result<()> {
        let t = to_tuple(tuple);
        let rel = self.declare(pred, t.len())?;
        rel.tuples.remove(&t);
        rel.undetermined.insert(t);
        Ok(())
    }

    pub fn relation(&self, pred: &str) -> Option<&Relation> {
        self.relations.get(pred)
    }

    pub fn contains<S: AsRef<str>>(&self, pred: &str, tuple: &[S]) -> bool {
        self.relations
            .get(pred)
            .is_some_and(|r| r.tuples.contains(&to_tuple(tuple)))
    }

    pub fn is_undetermined<S: AsRef<str>>(&self, pred: &str, tuple: &[S]) -> bool {
        self.relations
            .get(pred)
            .is_some_and(|r| r.undetermined.contains(&to_tuple(tuple)))
    }

    pub fn annotation<S: AsRef<str>>(&self, pred: &str, tuple: &[S]) -> Option<&str> {
        self.relations
            .get(pred)
            .and_then(|r| r.annotations.get(&to_tuple(tuple)))
            .map(String::as_str)
    }

    pub fn has_undetermined(&self) -> bool {
        self.relations.values().any(|r| !r.undetermined.is_empty())
    }

    pub fn tuples(&self, pred: &str) -> impl Iterator<Item = &Tuple> {
        self.relations.get(pred).into_iter().flat_map(|r| r.tuples.iter())
    }

    /// Human-readable attribute name, `R.<name>`.
    pub fn attr_name(&self, attr: &Attr) -> String {
        match self.relations.get(&attr.pred).and_then(|r| r.attrs.get(attr.pos)) {
            Some(name) => format!("{}.{}", attr.pred, name),
            None => attr.to_string(),
        }
    }

    /// Resolves `R.name` or `R.<1-based index>`.
    pub fn resolve_attr(&self, text: &str) -> Result<Attr> {
        let text = text.trim();
        let (pred, name) = text
            .rsplit_once('.')
            .ok_or_else(|| Error::Invalid(format!("attribute `{text}` is not of the form R.A")))?;
        let rel = self.relations.get(pred).ok_or_else(|| Error::MissingRelation(pred.to_string()))?;
        if let Some(pos) = rel.attrs.iter().position(|a| a == name) {
            return Ok(Attr::new(pred, pos));
        }
        match name.parse::<usize>() {
            Ok(i) if i >= 1 && i <= rel.arity() => Ok(Attr::new(pred, i - 1)),
            _ => Err(Error::Invalid(format!("unknown attribute `{text}`"))),
        }
    }

    /// Per-attribute active domains, including undetermined tuples.
    pub fn active_domain(&self) -> ActiveDomain {
        let mut per_attr: BTreeMap<Attr, BTreeSet<String>> = BTreeMap::new();
        let mut global = BTreeSet::new();
        for (pred, rel) in &self.relations {
            for pos in 0..rel.arity() {
                per_attr.entry(Attr::new(pred.clone(), pos)).or_default();
            }
            for t in rel.tuples.iter().chain(rel.undetermined.iter()) {
                for (pos, c) in t.iter().enumerate() {
                    per_attr.get_mut(&Attr::new(pred.clone(), pos)).unwrap().insert(c.clone());
                    global.insert(c.clone());
                }
            }
        }
        ActiveDomain { per_attr, global }
    }
}

fn to_tuple<S: AsRef<str>>(t: &[S]) -> Tuple {
    t.iter().map(|s| s.as_ref().to_string()).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ActiveDomain {
    pub per_attr: BTreeMap<Attr, BTreeSet<String>>,
    pub global: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DomainAssignment {
    pub doms: BTreeMap<Attr, BTreeSet<String>>,
}

static EMPTY: BTreeSet<String> = BTreeSet::new();

impl DomainAssignment {
    pub fn get(&self, attr: &Attr) -> &BTreeSet<String> {
        self.doms.get(attr).unwrap_or(&EMPTY)
    }

    pub fn of(&self, pred: &str, pos: usize) -> &BTreeSet<String> {
        self.get(&Attr::new(pred, pos))
    }

    pub fn set(&mut self, attr: Attr, values: impl IntoIterator<Item = String>) {
        self.doms.insert(attr, values.into_iter().collect());
    }

    /// Every attribute of `pred` (up to `arity`) gets the same domain.
    pub fn set_all(&mut self, pred: &str, arity: usize, values: &BTreeSet<String>) {
        for pos in 0..arity {
            self.doms.insert(Attr::new(pred, pos), values.clone());
        }
    }

    /// Checks dom(R.A) ⊇ adom(R.A).
    pub fn covers(&self, instance: &Instance) -> Result<()> {
        for (attr, values) in instance.active_domain().per_attr {
            let dom = self.get(&attr);
            if let Some(v) = values.iter().find(|v| !dom.contains(*v)) {
                return Err(Error::ConstantOutsideDomain {
                    attribute: instance.attr_name(&attr),
                    value: v.clone(),
                });
            }
        }
        Ok(())
    }
}

/// adom per attribute; attributes of one group share the union of their adoms.
pub fn default_domains(instance: &Instance, groups: &[Vec<Attr>]) -> DomainAssignment {
    let adom = instance.active_domain();
    let mut doms = adom.per_attr.clone();
    for group in groups {
        let union: BTreeSet<String> = group
            .iter()
            .flat_map(|a| adom.per_attr.get(a).into_iter().flatten().cloned())
            .collect();
        for attr in group {
            doms.insert(attr.clone(), union.clone());
        }
    }
    DomainAssignment { doms }
}

/// Completes a domain assignment for a program: EDB attributes missing from
/// `dom` get their adom, rule constants are added to the attribute they occur
/// in, and each IDB attribute gets the union of the domains of the
/// attributes its head variable binds to (constants contribute themselves).
pub fn program_domains(program: &Program, instance: &Instance, dom: &DomainAssignment) -> Result<DomainAssignment> {
    let mut out = dom.clone();
    let adom = instance.active_domain();
    for pred in program.edb_preds() {
        let arity = program.arity(pred).unwrap_or(0);
        for pos in 0..arity {
            let attr = Attr::new(pred, pos);
            if !out.doms.contains_key(&attr) {
                let values = adom.per_attr.get(&attr).cloned().unwrap_or_default();
                out.doms.insert(attr, values);
            }
        }
    }
    for rule in &program.rules {
        for atom in rule.body.iter().filter_map(Literal::atom) {
            if program.is_idb(&atom.pred) {
                continue;
            }
            for (pos, t) in atom.args.iter().enumerate() {
                if let Term::Const(c) = t {
                    out.doms.entry(Attr::new(atom.pred.clone(), pos)).or_default().insert(c.clone());
                }
            }
        }
    }
    // Values that a rule can feed into a negated IDB goal join that goal's
    // attribute domains, so derivations through absent IDB tuples are kept.
    let order = topological_order(program)?;
    let mut extra: BTreeMap<Attr, BTreeSet<String>> = BTreeMap::new();
    loop {
        for pred in &order {
            let arity = program.arity(pred).unwrap_or(0);
            let mut doms: Vec<BTreeSet<String>> =
                (0..arity).map(|pos| extra.get(&Attr::new(pred.clone(), pos)).cloned().unwrap_or_default()).collect();
            for rule in program.rules_for(pred) {
                for (pos, t) in rule.head.args.iter().enumerate() {
                    match t {
                        Term::Const(c) => {
                            doms[pos].insert(c.clone());
                        }
                        Term::Var(v) => doms[pos].extend(bound_values(rule, v, &out, false)),
                        Term::Func(..) => {}
                    }
                }
            }
            for (pos, d) in doms.into_iter().enumerate() {
                out.doms.insert(Attr::new(pred.clone(), pos), d);
            }
        }
        let mut grown = false;
        for rule in &program.rules {
            for lit in &rule.body {
                let Literal::Neg(atom) = lit else { continue };
                if !program.is_idb(&atom.pred) {
                    continue;
                }
                for (pos, t) in atom.args.iter().enumerate() {
                    let values: BTreeSet<String> = match t {
                        Term::Const(c) => BTreeSet::from([c.clone()]),
                        Term::Var(v) => bound_values(rule, v, &out, true),
                        Term::Func(..) => BTreeSet::new(),
                    };
                    let attr = Attr::new(atom.pred.clone(), pos);
                    let missing: Vec<String> = values.into_iter().filter(|c| !out.get(&attr).contains(c)).collect();
                    if !missing.is_empty() {
                        extra.entry(attr).or_default().extend(missing);
                        grown = true;
                    }
                }
            }
        }
        if !grown {
            break;
        }
    }
    Ok(out)
}

/// Union of the domains of the body attributes `var` occupies, optionally
/// only in positive atoms.
fn bound_values(rule: &Rule, var: &str, dom: &DomainAssignment, positive_only: bool) -> BTreeSet<String> {
    let mut values = BTreeSet::new();
    for lit in &rule.body {
        let atom = match lit {
            Literal::Pos(a) => a,
            Literal::Neg(a) if !positive_only => a,
            _ => continue,
        };
        for (pos, t) in atom.args.iter().enumerate() {
            if t.as_var() == Some(var) {
                values.extend(dom.of(&atom.pred, pos).iter().cloned());
            }
        }
    }
    values
}
