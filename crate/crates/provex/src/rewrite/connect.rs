//! Connectivity joins: keep only firing tuples reachable from the question.

use std::collections::BTreeSet;

use super::firing::{fire_pred, fresh_var, term_vars, Firing, RuleSet, FALSE};
use super::unify::{mgu, Unified};
use crate::datalog::{Atom, Literal, Program, Term};
use crate::question::Qualifier;

/// Derivation kind of a firing relation: successful (T) or failed (F).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    T,
    F,
}

impl Kind {
    pub fn suffix(self) -> &'static str {
        match self {
            Kind::T => "T",
            Kind::F => "F",
        }
    }

    pub fn invert(self) -> Kind {
        match self {
            Kind::T => Kind::F,
            Kind::F => Kind::T,
        }
    }
}

pub fn conn_pred(rule: &str, kind: Kind) -> String {
    format!("CONN_{rule}_{}", kind.suffix())
}

/// Firing atom of a copy: its terms, plus one status slot per goal for F.
pub(crate) fn firing_atom(pred: String, terms: &[Term], slots: Option<Vec<Term>>) -> Atom {
    let mut args = terms.to_vec();
    args.extend(slots.unwrap_or_default());
    Atom::new(pred, args)
}

pub(crate) fn slot_vars(n: usize, prefix: &str, used: &mut BTreeSet<String>) -> Vec<Term> {
    (1..=n).map(|j| Term::Var(fresh_var(&format!("{prefix}{j}"), used))).collect()
}

fn substitute(atom: &Atom, s: &std::collections::BTreeMap<String, Term>) -> Atom {
    Atom::new(
        atom.pred.clone(),
        atom.args
            .iter()
            .map(|t| match t {
                Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
                other => other.clone(),
            })
            .collect(),
    )
}

/// Connected program plus the `(copy, kind)` pairs whose connected relation is populated.
#[derive(Clone, Debug)]
pub struct Connected {
    pub program: Program,
    pub reached: BTreeSet<(usize, Kind)>,
}

/// Adds `CONN_<rule>_<T|F>` rules. Root copies are connected by definition; a
/// child copy is connected when its head matches goal `k` of a connected
/// parent binding, and for failed parents only when goal `k` failed.
pub fn add_connectivity(firing: &Firing, annotated: &Unified) -> Connected {
    let mut rules = RuleSet::default();
    let mut reached = BTreeSet::new();
    let mut queue = Vec::new();
    let root_kind = match annotated.question.qualifier {
        Qualifier::Why => Kind::T,
        Qualifier::WhyNot => Kind::F,
    };
    for &r in &annotated.roots {
        let copy = &annotated.copies[r];
        if root_kind == Kind::F && !firing.failed[r] {
            continue;
        }
        let mut used = term_vars(&copy.terms);
        let slots = (root_kind == Kind::F).then(|| slot_vars(copy.rule.body.len(), "S", &mut used));
        let conn = firing_atom(conn_pred(&copy.base, root_kind), &copy.terms, slots.clone());
        let fire = firing_atom(fire_pred(&copy.base, root_kind.suffix()), &copy.terms, slots);
        rules.add(conn, vec![Literal::Pos(fire)]);
        if reached.insert((r, root_kind)) {
            queue.push((r, root_kind));
        }
    }
    while let Some((pi, psi)) = queue.pop() {
        let parent = &annotated.copies[pi];
        for link in annotated.links.iter().filter(|l| l.parent == pi) {
            let negated = parent.rule.body[link.goal].is_negated();
            let phi = if negated { psi.invert() } else { psi };
            let cj = link.child;
            let child = &annotated.copies[cj];
            if phi == Kind::F && !firing.failed[cj] {
                continue;
            }
            let mut used = term_vars(&child.terms);
            let child_slots = (phi == Kind::F).then(|| slot_vars(child.rule.body.len(), "S", &mut used));
            let child_atom = firing_atom(fire_pred(&child.base, phi.suffix()), &child.terms, child_slots.clone());

            // Rename the parent apart from the child.
            let rename: std::collections::BTreeMap<String, Term> = term_vars(&parent.terms)
                .into_iter()
                .map(|v| {
                    let new = fresh_var(&format!("{v}_c1"), &mut used);
                    (v, Term::Var(new))
                })
                .collect();
            let goal = substitute(parent.rule.body[link.goal].atom().expect("links join atoms"), &rename);
            let Some(s) = mgu(&child.rule.head.args, &goal.args) else { continue };
            let parent_slots = (psi == Kind::F).then(|| {
                let mut slots = slot_vars(parent.rule.body.len(), "P", &mut used);
                slots[link.goal] = Term::constant(FALSE);
                slots
            });
            let parent_terms = substitute(&Atom::new("", parent.terms.clone()), &rename).args;
            let parent_atom = firing_atom(conn_pred(&parent.base, psi), &parent_terms, parent_slots);
            let child_atom = substitute(&child_atom, &s);
            let parent_atom = substitute(&parent_atom, &s);
            let head = Atom::new(conn_pred(&child.base, phi), child_atom.args.clone());
            rules.add(head, vec![Literal::Pos(child_atom), Literal::Pos(parent_atom)]);
            if reached.insert((cj, phi)) {
                queue.push((cj, phi));
            }
        }
    }
    let program = rules.into_program("c", firing.program.rules.clone(), &firing.program.answer);
    Connected { program, reached }
}
