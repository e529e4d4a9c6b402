//! Rewriting a conjunctive query along a d-tree, and factorized explanations.

use std::collections::{BTreeMap, BTreeSet};

use super::dtree::{attachment, body_atoms, check_coverage, check_keys, path_report, DTree, Flat};
use crate::datalog::{validate, Atom, DomainAssignment, Instance, Literal, Program, Rule, Term};
use crate::error::{Error, Result};
use crate::graph::ProvGraph;
use crate::question::ProvQuestion;
use crate::rewrite::{explain, ExplainKind};
use crate::semiring::{transform_graph, OpGraph, SemiringKind};

fn vars(names: &[String]) -> Vec<Term> {
    names.iter().map(|n| Term::var(n.as_str())).collect()
}

fn fresh_pred(base: &str, taken: &mut BTreeSet<String>) -> String {
    let mut name = base.to_string();
    let mut n = 2;
    while taken.contains(&name) {
        name = format!("{base}_{n}");
        n += 1;
    }
    taken.insert(name.clone());
    name
}

/// Rewrites `query` so that its provenance is factorized along `tree`.
pub fn rewrite_for_dtree(query: &Rule, tree: &DTree) -> Result<Program> {
    let unmerged = rewrite_unmerged(query, tree)?;
    Ok(merge(unmerged))
}

/// Generated rules before merging, with the tree they came from.
pub(crate) struct Unmerged {
    flat: Flat,
    keys: Vec<Vec<String>>,
    /// Rule of each tree node, in preorder; the query rule comes first.
    rules: Vec<Rule>,
    answer: String,
    generated: BTreeSet<String>,
}

fn rewrite_unmerged(query: &Rule, tree: &DTree) -> Result<Unmerged> {
    let atoms = body_atoms(query)?;
    let flat = tree.flatten()?;
    check_coverage(query, &flat)?;
    let report = path_report(query, &flat);
    if let Some(v) = report.violations.first() {
        return Err(Error::PathConditionViolated(format!("{} ({} and {})", v.atom, v.vars.0, v.vars.1)));
    }
    let keys = check_keys(query, tree, &flat)?;

    let mut taken: BTreeSet<String> = query.body.iter().filter_map(Literal::atom).map(|a| a.pred.clone()).collect();
    taken.insert(query.head.pred.clone());
    let preds: Vec<String> = flat.vars.iter().map(|v| fresh_pred(&format!("Q_{v}"), &mut taken)).collect();
    let node_atom = |i: usize| Atom::new(preds[i].clone(), vars(&keys[i]));

    let mut bodies: Vec<Vec<Literal>> =
        (0..flat.vars.len()).map(|i| flat.children[i].iter().map(|&c| Literal::Pos(node_atom(c))).collect()).collect();
    let mut top: Vec<Literal> = flat.roots().map(|r| Literal::Pos(node_atom(r))).collect();
    for a in atoms {
        match attachment(a, &flat) {
            Some(n) => bodies[n].push(Literal::Pos(a.clone())),
            None => top.push(Literal::Pos(a.clone())),
        }
    }
    let mut rules = vec![Rule::new(query.id.clone(), query.head.clone(), top)];
    for (i, body) in bodies.into_iter().enumerate() {
        rules.push(Rule::new(format!("{}_{}", query.id, flat.vars[i]), node_atom(i), body));
    }
    Ok(Unmerged { flat, keys, rules, answer: query.head.pred.clone(), generated: preds.into_iter().collect() })
}

/// Replaces body literal `pos` of `outer` (an atom over `inner`'s head
/// predicate) by `inner`'s body.
fn unfold(outer: &Rule, pos: usize, inner: &Rule) -> Rule {
    let Some(call) = outer.body[pos].atom() else {
        return outer.clone();
    };
    let outer_vars: BTreeSet<&str> = outer.vars().into_iter().collect();
    let mut subst: BTreeMap<String, Term> = BTreeMap::new();
    for (formal, actual) in inner.head.args.iter().zip(&call.args) {
        if let Some(v) = formal.as_var() {
            subst.insert(v.to_string(), actual.clone());
        }
    }
    for v in inner.vars() {
        if subst.contains_key(v) {
            continue;
        }
        let mut name = v.to_string();
        let mut n = 1;
        while outer_vars.contains(name.as_str()) || subst.values().any(|t| t.as_var() == Some(name.as_str())) {
            name = format!("{v}_{n}");
            n += 1;
        }
        subst.insert(v.to_string(), Term::var(name));
    }
    let mut map = |t: &Term| match t {
        Term::Var(v) => subst.get(v).cloned().unwrap_or_else(|| t.clone()),
        other => other.clone(),
    };
    let replaced = inner.map_terms(&mut map);
    let mut body = outer.body[..pos].to_vec();
    body.extend(replaced.body);
    body.extend_from_slice(&outer.body[pos + 1..]);
    Rule::new(outer.id.clone(), outer.head.clone(), body)
}

fn merge(u: Unmerged) -> Program {
    let Unmerged { flat, keys, rules, answer, generated } = u;
    let mut slots: Vec<Option<Rule>> = rules.into_iter().map(Some).collect();
    let slot_of = |pred: &str, slots: &[Option<Rule>]| slots.iter().position(|r| r.as_ref().is_some_and(|r| r.head.pred == pred));

    // Single-child chains, bottom-up: node i is slot i + 1.
    for x in (0..flat.vars.len()).rev() {
        let [y] = flat.children[x][..] else { continue };
        let mut expect: BTreeSet<&str> = keys[x].iter().map(String::as_str).collect();
        expect.insert(&flat.vars[x]);
        let got: BTreeSet<&str> = keys[y].iter().map(String::as_str).collect();
        if expect != got {
            continue;
        }
        let (Some(outer), Some(inner)) = (slots[x + 1].clone(), slots[y + 1].clone()) else { continue };
        if let Some(pos) = outer.body.iter().position(|l| l.atom().is_some_and(|a| a.pred == inner.head.pred)) {
            slots[x + 1] = Some(unfold(&outer, pos, &inner));
            slots[y + 1] = None;
        }
    }

    // Rules whose body is a single generated atom that projects nothing.
    loop {
        let mut changed = false;
        for i in 0..slots.len() {
            let Some(outer) = slots[i].clone() else { continue };
            let [Literal::Pos(call)] = &outer.body[..] else { continue };
            if !generated.contains(&call.pred) {
                continue;
            }
            let head: BTreeSet<&str> = outer.head.vars().into_iter().collect();
            if !call.vars().iter().all(|v| head.contains(v)) {
                continue;
            }
            let Some(j) = slot_of(&call.pred, &slots) else { continue };
            let Some(inner) = slots[j].clone() else { continue };
            slots[i] = Some(unfold(&outer, 0, &inner));
            slots[j] = None;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    Program { rules: slots.into_iter().flatten().collect(), answer }
}

/// Fixes head variables of `query` to the constants of the question pattern.
pub fn bind_question(query: &Rule, question: &ProvQuestion) -> Result<Rule> {
    let pattern = &question.pattern;
    if pattern.pred != query.head.pred || pattern.arity() != query.head.arity() {
        return Err(Error::Invalid(format!("question {pattern} does not match the head of {}", query.id)));
    }
    let mut subst: BTreeMap<String, Term> = BTreeMap::new();
    for (h, p) in query.head.args.iter().zip(&pattern.args) {
        match (h, p) {
            (Term::Var(v), Term::Const(_)) => {
                if let Some(prev) = subst.insert(v.clone(), p.clone()) {
                    if &prev != p {
                        return Err(Error::Invalid(format!("question {pattern} does not unify with {}", query.head)));
                    }
                }
            }
            (Term::Const(a), Term::Const(b)) if a != b => {
                return Err(Error::Invalid(format!("question {pattern} does not unify with {}", query.head)));
            }
            _ => {}
        }
    }
    Ok(query.map_terms(&mut |t| match t {
        Term::Var(v) => subst.get(v).cloned().unwrap_or_else(|| t.clone()),
        other => other.clone(),
    }))
}

/// A factorized explanation and the program that produced it.
#[derive(Clone, Debug)]
pub struct Factorized {
    pub program: Program,
    pub graph: ProvGraph,
    pub ops: OpGraph,
}

/// Binds the question's constants, rewrites along `tree`, explains the
/// rewritten program and converts the result to an N[X] operator graph.
pub fn factorized_explain(
    query: &Rule,
    instance: &Instance,
    dom: &DomainAssignment,
    question: &ProvQuestion,
    tree: &DTree,
) -> Result<Factorized> {
    let bound = bind_question(query, question)?;
    let program = rewrite_for_dtree(&bound, tree)?;
    validate(&program)?;
    let graph = explain(&program, instance, dom, question, ExplainKind::Full)?;
    let ops = transform_graph(&graph, SemiringKind::NX, instance)?;
    Ok(Factorized { program, graph, ops })
}
