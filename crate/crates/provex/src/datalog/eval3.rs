//! Three-valued evaluation for instances with undetermined tuples.
//!
//! A tuple is T if some derivation has only T goals and U if some derivation
//! has no F goal. Both sets are computed by one two-valued run over a program
//! with a certain (`#c`) and a possible (`#p`) copy of every predicate.

use std::collections::BTreeMap;
use std::fmt;

use super::ast::{Atom, Literal, Program, Rule};
use super::eval::Model;
use super::instance::{Instance, Tuple};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    T,
    F,
    U,
}

impl Status {
    pub fn invert(self) -> Status {
        match self {
            Status::T => Status::F,
            Status::F => Status::T,
            Status::U => Status::U,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Status::T => "T",
            Status::F => "F",
            Status::U => "U",
        }
    }

    /// Conjunction: F dominates, then U.
    pub fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::F, _) | (_, Status::F) => Status::F,
            (Status::U, _) | (_, Status::U) => Status::U,
            _ => Status::T,
        }
    }

    /// Disjunction: T dominates, then U.
    pub fn or(self, other: Status) -> Status {
        self.invert().and(other.invert()).invert()
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

fn cert(p: &str) -> String {
    format!("{p}#c")
}

fn poss(p: &str) -> String {
    format!("{p}#p")
}

fn renamed(a: &Atom, name: String) -> Atom {
    Atom { pred: name, args: a.args.clone() }
}

/// Statuses of all tuples after three-valued evaluation.
#[derive(Clone, Debug)]
pub struct ThreeValued {
    model: Model,
}

impl ThreeValued {
    pub fn status<S: AsRef<str>>(&self, pred: &str, tuple: &[S]) -> Status {
        if self.model.contains(&cert(pred), tuple) {
            Status::T
        } else if self.model.contains(&poss(pred), tuple) {
            Status::U
        } else {
            Status::F
        }
    }

    /// All tuples of `pred` whose status is T or U.
    pub fn non_false(&self, pred: &str) -> BTreeMap<Tuple, Status> {
        let mut out: BTreeMap<Tuple, Status> =
            self.model.tuples(&poss(pred)).into_iter().map(|t| (t, Status::U)).collect();
        for t in self.model.tuples(&cert(pred)) {
            out.insert(t, Status::T);
        }
        out
    }

    /// Every T or U tuple, keyed by predicate and tuple; absent keys are F.
    pub fn statuses(&self) -> BTreeMap<(String, Tuple), Status> {
        let preds: Vec<String> = self
            .model
            .predicates()
            .filter_map(|p| p.strip_suffix("#p").map(str::to_string))
            .collect();
        let mut out = BTreeMap::new();
        for p in preds {
            for (t, s) in self.non_false(&p) {
                out.insert((p.clone(), t), s);
            }
        }
        out
    }
}

pub fn evaluate3(program: &Program, instance: &Instance) -> Result<ThreeValued> {
    let idb = program.idb_preds();
    let mut model = Model::new();
    for pred in program.edb_preds() {
        let rel = instance.relation(pred).ok_or_else(|| Error::MissingRelation(pred.to_string()))?;
        model.declare(&cert(pred), rel.arity());
        model.declare(&poss(pred), rel.arity());
        for t in &rel.tuples {
            model.insert(&cert(pred), t);
            model.insert(&poss(pred), t);
        }
        for t in &rel.undetermined {
            model.insert(&poss(pred), t);
        }
    }
    let mut rules = Vec::new();
    for rule in &program.rules {
        for (suffix, pos, neg) in [("c", cert as fn(&str) -> String, poss as fn(&str) -> String), ("p", poss, cert)] {
            let body = rule
                .body
                .iter()
                .map(|l| match l {
                    Literal::Pos(a) => Literal::Pos(renamed(a, pos(&a.pred))),
                    Literal::Neg(a) => Literal::Neg(renamed(a, neg(&a.pred))),
                    other => other.clone(),
                })
                .collect();
            rules.push(Rule {
                id: format!("{}#{suffix}", rule.id),
                head: renamed(&rule.head, pos(&rule.head.pred)),
                body,
            });
        }
    }
    debug_assert!(idb.iter().all(|p| program.arity(p).is_some()));
    let answer = cert(&program.answer);
    model.run(&Program { rules, answer })?;
    for p in idb {
        let arity = program.arity(p).unwrap_or(0);
        model.declare(&cert(p), arity);
        model.declare(&poss(p), arity);
    }
    Ok(ThreeValued { model })
}
