//! Translation of formulas into Datalog programs with answer predicate `Q_phi`.

use std::collections::{BTreeMap, BTreeSet};

use super::formula::Formula;
use super::kinter::DOM;
use crate::datalog::{validate, Atom, Literal, Program, Rule, Term};
use crate::error::{Error, Result};

pub const ANSWER: &str = "Q_phi";

/// A translated program together with the formula it encodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Translation {
    /// The input after negation normal form and renaming apart.
    pub formula: Formula,
    pub program: Program,
    /// Head predicates of the inner rule of each universal quantifier.
    pub aux: BTreeSet<String>,
    /// Predicate computing each subformula, in preorder.
    pub subformulas: Vec<(String, Formula)>,
}

/// Datalog variable for a formula variable.
pub fn datalog_var(v: &str) -> String {
    let mut c = v.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn var(v: &str) -> Term {
    Term::var(datalog_var(v))
}

fn dl_term(t: &Term) -> Term {
    match t {
        Term::Var(v) => var(v),
        other => other.clone(),
    }
}

fn dl_atom(a: &Atom) -> Atom {
    Atom::new(a.pred.clone(), a.args.iter().map(dl_term).collect())
}

fn head(pred: &str, vars: &[String]) -> Atom {
    Atom::new(pred, vars.iter().map(|v| var(v)).collect())
}

fn dom(v: &str) -> Literal {
    Literal::Pos(Atom::new(DOM, vec![var(v)]))
}

struct Translator {
    rules: Vec<Rule>,
    aux: BTreeSet<String>,
    subformulas: Vec<(String, Formula)>,
    counter: usize,
}

impl Translator {
    fn next_name(&mut self) -> String {
        self.counter += 1;
        format!("{ANSWER}{}", self.counter)
    }

    fn rule(&mut self, head: Atom, body: Vec<Literal>) {
        let id = format!("r{}", self.rules.len() + 1);
        self.rules.push(Rule::new(id, head, body));
    }

    fn emit(&mut self, f: &Formula, name: &str) {
        self.subformulas.push((name.to_string(), f.clone()));
        let free = f.free_vars();
        let h = head(name, &free);
        match f {
            Formula::Atom(a) => self.rule(h, vec![Literal::Pos(dl_atom(a))]),
            Formula::NegAtom(a) => {
                let mut body: Vec<Literal> = free.iter().map(|v| dom(v)).collect();
                body.push(Literal::Neg(dl_atom(a)));
                self.rule(h, body);
            }
            Formula::Cmp(l, op, r) => {
                let mut body: Vec<Literal> = free.iter().map(|v| dom(v)).collect();
                body.push(Literal::Cmp(dl_term(l), *op, dl_term(r)));
                self.rule(h, body);
            }
            Formula::Exists(x, b) => {
                let child = self.next_name();
                let body = vec![dom(x), Literal::Pos(head(&child, &b.free_vars()))];
                self.rule(h, body);
                self.emit(b, &child);
            }
            Formula::Forall(x, b) => {
                let aux = format!("{name}'");
                self.aux.insert(aux.clone());
                let mut body: Vec<Literal> = free.iter().map(|v| dom(v)).collect();
                body.push(Literal::Neg(head(&aux, &free)));
                self.rule(h, body);
                let child = self.next_name();
                let mut body = vec![dom(x)];
                body.extend(free.iter().map(|v| dom(v)));
                body.push(Literal::Neg(head(&child, &b.free_vars())));
                self.rule(head(&aux, &free), body);
                self.emit(b, &child);
            }
            Formula::And(l, r) => {
                let (c1, c2) = (self.next_name(), self.next_name());
                let body = vec![Literal::Pos(head(&c1, &l.free_vars())), Literal::Pos(head(&c2, &r.free_vars()))];
                self.rule(h, body);
                self.emit(l, &c1);
                self.emit(r, &c2);
            }
            Formula::Or(l, r) => {
                let (c1, c2) = (self.next_name(), self.next_name());
                for (child, sub) in [(&c1, l), (&c2, r)] {
                    let own = sub.free_vars();
                    let mut body: Vec<Literal> = free.iter().filter(|v| !own.contains(v)).map(|v| dom(v)).collect();
                    body.push(Literal::Pos(head(child, &own)));
                    self.rule(h.clone(), body);
                }
                self.emit(l, &c1);
                self.emit(r, &c2);
            }
            Formula::Not(_) => unreachable!("formulas are in negation normal form"),
        }
    }
}

/// Translates `formula` (after nnf and renaming apart) into a program.
pub fn translate(formula: &Formula) -> Result<Translation> {
    let formula = formula.nnf().rename_apart();
    let reserved = |p: &str| p == DOM || p.starts_with(ANSWER);
    if let Some(p) = formula.predicates().keys().find(|p| reserved(p)) {
        return Err(Error::Invalid(format!("predicate name {p} is reserved")));
    }
    let names: BTreeMap<String, String> = formula.all_vars().into_iter().map(|v| (datalog_var(&v), v)).collect();
    if names.len() != formula.all_vars().len() {
        return Err(Error::Invalid("variable names must differ in more than capitalisation".into()));
    }
    let mut t = Translator { rules: Vec::new(), aux: BTreeSet::new(), subformulas: Vec::new(), counter: 0 };
    t.emit(&formula, ANSWER);
    let program = Program { rules: t.rules, answer: ANSWER.to_string() };
    validate(&program)?;
    Ok(Translation { formula, program, aux: t.aux, subformulas: t.subformulas })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules(f: &str) -> Vec<String> {
        let t = translate(&Formula::parse(f).unwrap()).unwrap();
        t.program.rules.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn universal_existential() {
        assert_eq!(
            rules("forall x. exists y. R(x,y)"),
            [
                "r1: Q_phi() :- not Q_phi'().",
                "r2: Q_phi'() :- Dom(X), not Q_phi1(X).",
                "r3: Q_phi1(X) :- Dom(Y), Q_phi2(X,Y).",
                "r4: Q_phi2(X,Y) :- R(X,Y).",
            ]
        );
    }

    #[test]
    fn literal_copy() {
        assert_eq!(rules("R(X,Y)"), ["r1: Q_phi(X,Y) :- R(X,Y)."]);
    }

    #[test]
    fn disjunction_pads_missing_variables() {
        assert_eq!(
            rules("R(X) | S(Y)"),
            [
                "r1: Q_phi(X,Y) :- Dom(Y), Q_phi1(X).",
                "r2: Q_phi(X,Y) :- Dom(X), Q_phi2(Y).",
                "r3: Q_phi1(X) :- R(X).",
                "r4: Q_phi2(Y) :- S(Y).",
            ]
        );
    }

    #[test]
    fn negation_and_comparison() {
        assert_eq!(
            rules("exists x. !R(x) & x != a"),
            [
                "r1: Q_phi() :- Dom(X), Q_phi1(X).",
                "r2: Q_phi1(X) :- Q_phi2(X), Q_phi3(X).",
                "r3: Q_phi2(X) :- Dom(X), not R(X).",
                "r4: Q_phi3(X) :- Dom(X), X != a.",
            ]
        );
    }

    #[test]
    fn reserved_names() {
        assert!(translate(&Formula::parse("Dom(a)").unwrap()).is_err());
    }
}
