//! Static checks: arity consistency, safety, non-recursion, id uniqueness.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::{Literal, Program, Rule, Term};
use crate::error::{Error, Result};

pub fn validate(program: &Program) -> Result<()> {
    check_ids(program)?;
    check_arities(program)?;
    for rule in &program.rules {
        check_safety(rule)?;
    }
    topological_order(program)?;
    if !program.is_idb(&program.answer) {
        return Err(Error::UnknownAnswer(program.answer.clone()));
    }
    Ok(())
}

fn check_ids(program: &Program) -> Result<()> {
    let mut seen = BTreeSet::new();
    for rule in &program.rules {
        if !seen.insert(rule.id.as_str()) {
            return Err(Error::DuplicateRuleId(rule.id.clone()));
        }
    }
    let preds: BTreeSet<&str> = program
        .rules
        .iter()
        .flat_map(|r| std::iter::once(&r.head).chain(r.body.iter().filter_map(Literal::atom)))
        .map(|a| a.pred.as_str())
        .collect();
    if let Some(clash) = seen.intersection(&preds).next() {
        return Err(Error::NameClash(clash.to_string()));
    }
    Ok(())
}

fn check_arities(program: &Program) -> Result<()> {
    let mut arity: HashMap<&str, usize> = HashMap::new();
    for rule in &program.rules {
        if rule.body.is_empty() {
            return Err(Error::Invalid(format!("rule {} has an empty body", rule.id)));
        }
        for atom in std::iter::once(&rule.head).chain(rule.body.iter().filter_map(Literal::atom)) {
            let expected = *arity.entry(&atom.pred).or_insert(atom.arity());
            if expected != atom.arity() {
                return Err(Error::ArityMismatch {
                    pred: atom.pred.clone(),
                    expected,
                    found: atom.arity(),
                });
            }
        }
    }
    Ok(())
}

pub fn check_safety(rule: &Rule) -> Result<()> {
    let positive: BTreeSet<&str> = rule
        .body
        .iter()
        .filter_map(|l| match l {
            Literal::Pos(a) => Some(a.vars()),
            _ => None,
        })
        .flatten()
        .collect();
    for var in rule.vars() {
        if !positive.contains(var) {
            return Err(Error::UnsafeRule { rule: rule.id.clone(), var: var.to_string() });
        }
    }
    for lit in &rule.body {
        if lit.args().iter().any(|t| matches!(t, Term::Func(..))) {
            return Err(Error::Invalid(format!("function term in body of rule {}", rule.id)));
        }
    }
    Ok(())
}

/// IDB predicates in dependency order; fails on cycles.
pub fn topological_order(program: &Program) -> Result<Vec<String>> {
    let mut deps: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for rule in &program.rules {
        let entry = deps.entry(&rule.head.pred).or_default();
        for atom in rule.body.iter().filter_map(Literal::atom) {
            entry.insert(&atom.pred);
        }
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        p: &'a str,
        deps: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        marks: &mut HashMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
        out: &mut Vec<String>,
    ) -> Result<()> {
        match marks.get(p) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let start = stack.iter().position(|q| *q == p).unwrap_or(0);
                let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(p.to_string());
                return Err(Error::RecursionDetected { cycle });
            }
            None => {}
        }
        let Some(children) = deps.get(p) else {
            return Ok(());
        };
        marks.insert(p, Mark::Active);
        stack.push(p);
        for c in children {
            visit(c, deps, marks, stack, out)?;
        }
        stack.pop();
        marks.insert(p, Mark::Done);
        out.push(p.to_string());
        Ok(())
    }
    let mut marks = HashMap::new();
    let mut out = Vec::new();
    for p in deps.keys() {
        visit(p, &deps, &mut marks, &mut Vec::new(), &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use crate::datalog::parse_program;
    use crate::error::Error;

    #[test]
    fn unsafe_negated_variable() {
        let err = parse_program("Q(X) :- R(X,Y), not S(Y,Z).").unwrap_err();
        assert_eq!(err, Error::UnsafeRule { rule: "r1".into(), var: "Z".into() });
    }

    #[test]
    fn self_recursion() {
        let err = parse_program("P(X) :- P(X).").unwrap_err();
        assert!(matches!(err, Error::RecursionDetected { cycle } if cycle == ["P", "P"]));
    }

    #[test]
    fn mutual_recursion() {
        let err = parse_program("P(X) :- Q(X).\nQ(X) :- R(X), P(X).").unwrap_err();
        assert!(matches!(err, Error::RecursionDetected { .. }));
    }

    #[test]
    fn arity_and_ids() {
        assert!(matches!(
            parse_program("Q(X) :- R(X), R(X,X)."),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            parse_program("r1: Q(X) :- R(X).\nr1: Q(X) :- S(X)."),
            Err(Error::DuplicateRuleId(_))
        ));
        assert!(matches!(parse_program("Q(X) :- r1(X)."), Err(Error::NameClash(_))));
    }

    #[test]
    fn unsafe_comparison_variable() {
        assert!(matches!(parse_program("Q(X) :- R(X), Y < X."), Err(Error::UnsafeRule { .. })));
    }
}
