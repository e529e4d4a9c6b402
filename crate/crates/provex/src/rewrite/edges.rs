//! Edge rules: Skolem-labelled node identifiers over connected firing tuples.

use std::collections::{BTreeMap, BTreeSet};

use super::connect::{conn_pred, firing_atom, slot_vars, Connected, Kind};
use super::firing::{fire_pred, term_vars, RuleSet, FALSE};
use super::unify::Unified;
use crate::datalog::{Atom, Literal, Program, Status, Term};
use crate::graph::NodeKind;
use crate::question::Qualifier;

pub const EDGE: &str = "edge";
pub const NODE: &str = "node";

/// What a Skolem functor in the edge relation stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Functor {
    pub kind: NodeKind,
    pub name: String,
    /// One-based goal position for goal nodes, zero otherwise.
    pub pos: usize,
    pub status: Status,
}

#[derive(Default)]
struct Functors {
    map: BTreeMap<String, Functor>,
}

impl Functors {
    fn term(&mut self, kind: NodeKind, name: &str, pos: usize, status: Status, args: Vec<Term>) -> Term {
        let prefix = match kind {
            NodeKind::Tuple => "REL",
            NodeKind::Rule => "RULE",
            _ => "GOAL",
        };
        let functor = if kind == NodeKind::Goal {
            format!("{prefix}_{name}_{pos}_{status}")
        } else {
            format!("{prefix}_{name}_{status}")
        };
        let info = Functor { kind, name: name.to_string(), pos, status };
        let old = self.map.insert(functor.clone(), info.clone());
        debug_assert!(old.map_or(true, |o| o == info), "functor {functor} is ambiguous");
        Term::Func(functor, args)
    }
}

fn status(kind: Kind) -> Status {
    match kind {
        Kind::T => Status::T,
        Kind::F => Status::F,
    }
}

/// Edge program plus the decoding table for its Skolem functors.
#[derive(Clone, Debug)]
pub struct EdgeProgram {
    pub program: Program,
    pub functors: BTreeMap<String, Functor>,
}

fn edge(from: Term, to: Term) -> Atom {
    Atom::new(EDGE, vec![from, to])
}

fn node_rule(rules: &mut RuleSet, f: &mut Functors, annotated: &Unified) {
    let pattern = &annotated.question.pattern;
    let kind = match annotated.question.qualifier {
        Qualifier::Why => Kind::T,
        Qualifier::WhyNot => Kind::F,
    };
    let label = f.term(NodeKind::Tuple, &pattern.pred, 0, status(kind), pattern.args.clone());
    let fire = Atom::new(fire_pred(&pattern.pred, kind.suffix()), pattern.args.clone());
    rules.add(Atom::new(NODE, vec![label]), vec![Literal::Pos(fire)]);
}

/// Base rules and kinds that have a populated connected relation.
fn reached_rules<'a>(connected: &Connected, annotated: &'a Unified) -> BTreeSet<(&'a str, Kind)> {
    connected
        .reached
        .iter()
        .map(|&(c, k)| (annotated.copies[c].base.as_str(), k))
        .collect()
}

/// One Tuple→Rule edge rule, one Rule→Goal rule per goal (failed goals only
/// for failed derivations) and one Goal→Tuple rule per relational goal.
pub fn add_edge_rules(connected: &Connected, annotated: &Unified, program: &Program) -> EdgeProgram {
    let mut rules = RuleSet::default();
    let mut f = Functors::default();
    node_rule(&mut rules, &mut f, annotated);
    for (rid, kind) in reached_rules(connected, annotated) {
        let rule = program.rule(rid).expect("copies come from the program");
        let st = status(kind);
        let terms: Vec<Term> = rule.vars().into_iter().map(Term::var).collect();
        let mut used = term_vars(&terms);
        let slots = (kind == Kind::F).then(|| slot_vars(rule.body.len(), "S", &mut used));
        let conn = |failed_goal: Option<usize>| {
            let slots = slots.clone().map(|mut s| {
                if let Some(j) = failed_goal {
                    s[j] = Term::constant(FALSE);
                }
                s
            });
            Literal::Pos(firing_atom(conn_pred(rid, kind), &terms, slots))
        };
        let head = f.term(NodeKind::Tuple, &rule.head.pred, 0, st, rule.head.args.clone());
        let rule_node = f.term(NodeKind::Rule, rid, 0, st, terms.clone());
        rules.add(edge(head, rule_node.clone()), vec![conn(None)]);
        for (j, lit) in rule.body.iter().enumerate() {
            let args: Vec<Term> = lit.args().into_iter().cloned().collect();
            let goal = f.term(NodeKind::Goal, rid, j + 1, st, args.clone());
            rules.add(edge(rule_node.clone(), goal.clone()), vec![conn(Some(j))]);
            if let Some(atom) = lit.atom() {
                let ts = if lit.is_negated() { st.invert() } else { st };
                let tuple = f.term(NodeKind::Tuple, &atom.pred, 0, ts, args);
                rules.add(edge(goal, tuple), vec![conn(Some(j))]);
            }
        }
    }
    EdgeProgram { program: rules.into_program("e", connected.program.rules.clone(), EDGE), functors: f.map }
}

/// Tuple-to-tuple edges: each head tuple points at the tuples of its shown goals.
pub fn add_which_edge_rules(connected: &Connected, annotated: &Unified, program: &Program) -> EdgeProgram {
    let mut rules = RuleSet::default();
    let mut f = Functors::default();
    node_rule(&mut rules, &mut f, annotated);
    for (rid, kind) in reached_rules(connected, annotated) {
        let rule = program.rule(rid).expect("copies come from the program");
        let st = status(kind);
        let terms: Vec<Term> = rule.vars().into_iter().map(Term::var).collect();
        let mut used = term_vars(&terms);
        let slots = (kind == Kind::F).then(|| slot_vars(rule.body.len(), "S", &mut used));
        let head = f.term(NodeKind::Tuple, &rule.head.pred, 0, st, rule.head.args.clone());
        for (j, lit) in rule.body.iter().enumerate() {
            let Some(atom) = lit.atom() else { continue };
            let slots = slots.clone().map(|mut s| {
                s[j] = Term::constant(FALSE);
                s
            });
            let ts = if lit.is_negated() { st.invert() } else { st };
            let tuple = f.term(NodeKind::Tuple, &atom.pred, 0, ts, atom.args.clone());
            rules.add(
                edge(head.clone(), tuple),
                vec![Literal::Pos(firing_atom(conn_pred(rid, kind), &terms, slots))],
            );
        }
    }
    EdgeProgram { program: rules.into_program("e", connected.program.rules.clone(), EDGE), functors: f.map }
}
