//! Firing rules: rewritten rules whose heads expose the variable bindings of
//! successful and failed derivations.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexSet;

use super::unify::{Annotation, Unified, UnifiedRule};
use crate::datalog::{Atom, DomainAssignment, Literal, Program, Rule, Term};

pub const TRUE: &str = "true";
pub const FALSE: &str = "false";

pub fn fire_pred(name: &str, kind: &str) -> String {
    format!("FIRE_{name}_{kind}")
}

pub fn dom_pred(pred: &str, pos: usize) -> String {
    format!("DOM_{pred}_{}", pos + 1)
}

/// The firing program together with the domain relations it reads.
#[derive(Clone, Debug)]
pub struct Firing {
    pub program: Program,
    /// Contents of every `DOM_<pred>_<pos>` relation used by the program.
    pub doms: BTreeMap<String, BTreeSet<String>>,
    /// Per copy: whether a failed-derivation firing rule was generated.
    pub failed: Vec<bool>,
}

/// Collects rules without duplicates and names them `<prefix><n>`.
#[derive(Default)]
pub(crate) struct RuleSet {
    rules: IndexSet<(Atom, Vec<Literal>)>,
}

impl RuleSet {
    pub(crate) fn add(&mut self, head: Atom, body: Vec<Literal>) {
        self.rules.insert((head, body));
    }

    pub(crate) fn into_program(self, prefix: &str, mut existing: Vec<Rule>, answer: &str) -> Program {
        let start = existing.len();
        for (i, (head, body)) in self.rules.into_iter().enumerate() {
            existing.push(Rule::new(format!("{prefix}{}", start + i + 1), head, body));
        }
        Program { rules: existing, answer: answer.to_string() }
    }
}

/// Picks `base`, or `base` with trailing underscores, avoiding `used`.
pub(crate) fn fresh_var(base: &str, used: &mut BTreeSet<String>) -> String {
    let mut name = base.to_string();
    while used.contains(&name) {
        name.push('_');
    }
    used.insert(name.clone());
    name
}

pub(crate) fn term_vars(terms: &[Term]) -> BTreeSet<String> {
    terms.iter().filter_map(|t| t.as_var().map(str::to_string)).collect()
}

struct Builder<'a> {
    program: &'a Program,
    dom: &'a DomainAssignment,
    rules: RuleSet,
    doms: BTreeMap<String, BTreeSet<String>>,
    done: BTreeSet<(Atom, Annotation)>,
}

impl Builder<'_> {
    fn guard(&mut self, atoms: &[&Atom]) -> Vec<Literal> {
        let mut out = Vec::new();
        for atom in atoms {
            for (pos, t) in atom.args.iter().enumerate() {
                if let Term::Var(v) = t {
                    let name = dom_pred(&atom.pred, pos);
                    self.doms
                        .entry(name.clone())
                        .or_insert_with(|| self.dom.of(&atom.pred, pos).clone());
                    let lit = Literal::Pos(Atom::new(name, vec![Term::Var(v.clone())]));
                    if !out.contains(&lit) {
                        out.push(lit);
                    }
                }
            }
        }
        out
    }

    /// Emits the rules for `FIRE_<pred>_<need>` restricted to the pattern `atom`.
    fn need(&mut self, atom: &Atom, need: Annotation) {
        if !self.done.insert((atom.clone(), need)) {
            return;
        }
        let pred = atom.pred.as_str();
        let idb = self.program.is_idb(pred);
        match need {
            Annotation::T => {
                if !idb {
                    self.rules.add(
                        Atom::new(fire_pred(pred, "T"), atom.args.clone()),
                        vec![Literal::Pos(atom.clone())],
                    );
                }
            }
            Annotation::F => {
                let mut body = self.guard(&[atom]);
                let absent = if idb {
                    self.need(atom, Annotation::T);
                    Atom::new(fire_pred(pred, "T"), atom.args.clone())
                } else {
                    atom.clone()
                };
                body.push(Literal::Neg(absent));
                self.rules.add(Atom::new(fire_pred(pred, "F"), atom.args.clone()), body);
            }
            Annotation::FT => {
                self.need(atom, Annotation::T);
                self.need(atom, Annotation::F);
                for (flag, kind) in [(TRUE, "T"), (FALSE, "F")] {
                    let mut args = atom.args.clone();
                    args.push(Term::constant(flag));
                    self.rules.add(
                        Atom::new(fire_pred(pred, "FT"), args),
                        vec![Literal::Pos(Atom::new(fire_pred(pred, kind), atom.args.clone()))],
                    );
                }
            }
        }
    }

    fn success_rule(&mut self, copy: &UnifiedRule) {
        let rule = &copy.rule;
        let head = Atom::new(fire_pred(&copy.base, "T"), copy.terms.clone());
        self.rules.add(
            Atom::new(fire_pred(&rule.head.pred, "T"), rule.head.args.clone()),
            vec![Literal::Pos(head.clone())],
        );
        let body = rule
            .body
            .iter()
            .map(|lit| match lit {
                Literal::Pos(a) => {
                    self.need(a, Annotation::T);
                    Literal::Pos(Atom::new(fire_pred(&a.pred, "T"), a.args.clone()))
                }
                Literal::Neg(a) => {
                    self.need(a, Annotation::F);
                    Literal::Pos(Atom::new(fire_pred(&a.pred, "F"), a.args.clone()))
                }
                cmp => cmp.clone(),
            })
            .collect();
        self.rules.add(head, body);
    }

    fn failure_rules(&mut self, copy: &UnifiedRule) {
        let rule = &copy.rule;
        self.need(&rule.head, Annotation::F);
        let mut used: BTreeSet<String> = term_vars(&copy.terms);
        let flags: Vec<String> = (1..=rule.body.len()).map(|j| fresh_var(&format!("V{j}"), &mut used)).collect();
        let atoms: Vec<&Atom> = rule.body.iter().filter_map(Literal::atom).collect();
        let guard = self.guard(&atoms);
        // One variant per truth assignment of the comparison goals.
        let cmps: Vec<usize> = (0..rule.body.len()).filter(|&j| rule.body[j].is_builtin()).collect();
        for mask in 0..(1usize << cmps.len()) {
            let mut head_args = copy.terms.clone();
            let mut body = vec![Literal::Pos(Atom::new(fire_pred(&rule.head.pred, "F"), rule.head.args.clone()))];
            for (j, lit) in rule.body.iter().enumerate() {
                let flag = Term::Var(flags[j].clone());
                match lit {
                    Literal::Pos(a) | Literal::Neg(a) => {
                        self.need(a, Annotation::FT);
                        let mut args = a.args.clone();
                        args.push(flag.clone());
                        body.push(Literal::Pos(Atom::new(fire_pred(&a.pred, "FT"), args)));
                        head_args.push(if lit.is_negated() { Term::Func("neg".into(), vec![flag]) } else { flag });
                    }
                    Literal::Cmp(l, op, r) => {
                        let bit = cmps.iter().position(|&c| c == j).expect("comparison index");
                        if mask & (1 << bit) == 0 {
                            body.push(Literal::Cmp(l.clone(), *op, r.clone()));
                            head_args.push(Term::constant(TRUE));
                        } else {
                            body.push(Literal::Cmp(l.clone(), op.negate(), r.clone()));
                            head_args.push(Term::constant(FALSE));
                        }
                    }
                }
            }
            body.extend(guard.iter().cloned());
            self.rules.add(Atom::new(fire_pred(&copy.base, "F"), head_args), body);
        }
    }

    /// Constants bound by unification must be admissible values of every body
    /// attribute the variable occupies; otherwise no failed derivation exists.
    fn bindings_in_domain(&self, copy: &UnifiedRule) -> bool {
        let base = self.program.rule(&copy.base).expect("copy of a program rule");
        base.vars().into_iter().zip(&copy.terms).all(|(v, t)| {
            let Term::Const(c) = t else { return true };
            base.body.iter().filter_map(Literal::atom).all(|a| {
                a.args
                    .iter()
                    .enumerate()
                    .all(|(pos, arg)| arg.as_var() != Some(v) || self.dom.of(&a.pred, pos).contains(c))
            })
        })
    }
}

/// Generates firing rules for every annotated copy. `dom` must already be
/// completed for the program (see `program_domains`).
pub fn create_firing_rules(annotated: &Unified, program: &Program, dom: &DomainAssignment) -> Firing {
    let mut b = Builder { program, dom, rules: RuleSet::default(), doms: BTreeMap::new(), done: BTreeSet::new() };
    let pattern = &annotated.question.pattern;
    match annotated.question.qualifier {
        crate::Qualifier::Why => b.need(pattern, Annotation::T),
        crate::Qualifier::WhyNot => b.need(pattern, Annotation::F),
    }
    let mut failed = Vec::with_capacity(annotated.copies.len());
    for copy in &annotated.copies {
        b.success_rule(copy);
        let fire_failed = copy.annotation.is_some_and(Annotation::has_f) && b.bindings_in_domain(copy);
        if fire_failed {
            b.failure_rules(copy);
        }
        failed.push(fire_failed);
    }
    let program = b.rules.into_program("f", Vec::new(), &fire_pred(&pattern.pred, "T"));
    Firing { program, doms: b.doms, failed }
}
