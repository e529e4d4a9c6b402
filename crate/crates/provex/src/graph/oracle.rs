//! Direct construction of the full provenance graph by enumerating every
//! domain-grounded derivation. Exponential; intended for small inputs.

use std::collections::{BTreeMap, BTreeSet};

use super::label::{NodeKind, NodeLabel};
use super::model::ProvGraph;
use crate::datalog::{
    evaluate3, program_domains, Atom, DomainAssignment, Instance, Literal, Program, Status, Term, ThreeValued,
};
use crate::error::{Error, Result};
use crate::question::{pattern_matches, ProvQuestion, Qualifier};

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// Calls `f` with every combination of one value per position.
fn for_each_product(sets: &[Vec<&str>], f: &mut dyn FnMut(&[&str])) {
    if sets.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; sets.len()];
    let mut cur: Vec<&str> = sets.iter().map(|s| s[0]).collect();
    loop {
        f(&cur);
        let mut k = sets.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < sets[k].len() {
                cur[k] = sets[k][idx[k]];
                break;
            }
            idx[k] = 0;
            cur[k] = sets[k][0];
        }
    }
}

fn product_size(sets: &[Vec<&str>]) -> Option<usize> {
    sets.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.len()))
}

fn ground(args: &[Term], env: &BTreeMap<&str, &str>) -> Result<Vec<String>> {
    args.iter()
        .map(|t| match t {
            Term::Var(v) => Ok(env[v.as_str()].to_string()),
            Term::Const(c) => Ok(c.clone()),
            Term::Func(..) => Err(Error::Invalid("function terms are not allowed here".into())),
        })
        .collect()
}

pub fn build_full_graph(program: &Program, instance: &Instance, dom: &DomainAssignment) -> Result<ProvGraph> {
    build_full_graph_capped(program, instance, dom, DEFAULT_NODE_CAP)
}

pub fn build_full_graph_capped(
    program: &Program,
    instance: &Instance,
    dom: &DomainAssignment,
    cap: usize,
) -> Result<ProvGraph> {
    let doms = program_domains(program, instance, dom)?;
    let statuses = evaluate3(program, instance)?;
    let mut g = ProvGraph::new();
    let mut budget = cap;
    let mut spend = |n: usize| -> Result<()> {
        budget = budget.checked_sub(n).ok_or(Error::DomainTooLarge { cap })?;
        Ok(())
    };

    let preds: BTreeSet<&str> = program.edb_preds().union(&program.idb_preds()).copied().collect();
    for pred in preds {
        let arity = program.arity(pred).unwrap_or(0);
        let sets: Vec<Vec<&str>> = (0..arity)
            .map(|i| doms.of(pred, i).iter().map(String::as_str).collect())
            .collect();
        spend(product_size(&sets).unwrap_or(usize::MAX))?;
        for_each_product(&sets, &mut |t| {
            g.add_node(NodeLabel::tuple(pred, t), statuses.status(pred, t));
        });
    }

    for rule in &program.rules {
        for (j, lit) in rule.body.iter().enumerate() {
            if lit.is_negated() {
                g.mark_negated_goal(&rule.id, j + 1);
            }
        }
        let vars = rule.vars();
        let sets: Vec<Vec<&str>> = vars
            .iter()
            .map(|v| {
                let mut cand: Option<BTreeSet<&str>> = None;
                for atom in rule.body.iter().filter_map(Literal::atom) {
                    for (pos, t) in atom.args.iter().enumerate() {
                        if t.as_var() == Some(v) {
                            let d: BTreeSet<&str> = doms.of(&atom.pred, pos).iter().map(String::as_str).collect();
                            cand = Some(match cand {
                                None => d,
                                Some(c) => c.intersection(&d).copied().collect(),
                            });
                        }
                    }
                }
                cand.unwrap_or_default().into_iter().collect()
            })
            .collect();
        spend(product_size(&sets).unwrap_or(usize::MAX))?;
        let mut failure = None;
        for_each_product(&sets, &mut |values| {
            if failure.is_none() {
                let env: BTreeMap<&str, &str> = vars.iter().copied().zip(values.iter().copied()).collect();
                if let Err(e) = add_derivation(&mut g, rule, &env, values, &statuses) {
                    failure = Some(e);
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if g.node_count() > cap {
            return Err(Error::DomainTooLarge { cap });
        }
    }
    Ok(g)
}

fn goal_status(lit: &Literal, env: &BTreeMap<&str, &str>, statuses: &ThreeValued) -> Result<(Vec<String>, Status)> {
    Ok(match lit {
        Literal::Pos(a) => {
            let args = ground(&a.args, env)?;
            let s = statuses.status(&a.pred, &args);
            (args, s)
        }
        Literal::Neg(a) => {
            let args = ground(&a.args, env)?;
            let s = statuses.status(&a.pred, &args).invert();
            (args, s)
        }
        Literal::Cmp(l, op, r) => {
            let args = ground(&[l.clone(), r.clone()], env)?;
            let s = if op.holds(&args[0], &args[1]) { Status::T } else { Status::F };
            (args, s)
        }
    })
}

fn add_derivation(
    g: &mut ProvGraph,
    rule: &crate::datalog::Rule,
    env: &BTreeMap<&str, &str>,
    values: &[&str],
    statuses: &ThreeValued,
) -> Result<()> {
    let goals: Vec<(Vec<String>, Status)> = rule
        .body
        .iter()
        .map(|l| goal_status(l, env, statuses))
        .collect::<Result<_>>()?;
    let status = goals.iter().fold(Status::T, |acc, (_, s)| acc.and(*s));
    let head_args = ground(&rule.head.args, env)?;
    let head_status = statuses.status(&rule.head.pred, &head_args);
    if status == Status::F && head_status == Status::T {
        return Ok(());
    }
    let head = g.ensure_node(NodeLabel::tuple(&rule.head.pred, &head_args), head_status);
    let rule_node = g.add_node(NodeLabel::rule(&rule.id, values), status);
    g.add_edge_idx(head, rule_node);
    for (j, (lit, (args, gs))) in rule.body.iter().zip(goals).enumerate() {
        if status == Status::F && gs == Status::T {
            continue;
        }
        let goal = g.add_node(NodeLabel::goal(&rule.id, j + 1, &args), gs);
        g.add_edge_idx(rule_node, goal);
        if let Some(atom) = lit.atom() {
            let ts = statuses.status(&atom.pred, &args);
            let tuple = g.ensure_node(NodeLabel::tuple(&atom.pred, &args), ts);
            g.add_edge_idx(goal, tuple);
        }
    }
    Ok(())
}

/// Ground atoms matching a provenance question. Undetermined tuples match both qualifiers.
pub fn match_question(
    question: &ProvQuestion,
    program: &Program,
    instance: &Instance,
    dom: &DomainAssignment,
) -> Result<BTreeSet<Atom>> {
    let pattern = &question.pattern;
    let pred = pattern.pred.as_str();
    let doms = validate_question(question, program, instance, dom)?;
    let statuses = evaluate3(program, instance)?;
    let mut out = BTreeSet::new();
    let to_atom = |t: &[&str]| Atom::new(pred, t.iter().map(|c| Term::constant(*c)).collect());
    match question.qualifier {
        Qualifier::Why => {
            for t in statuses.non_false(pred).keys() {
                if pattern_matches(pattern, t) {
                    out.insert(to_atom(&t.iter().map(String::as_str).collect::<Vec<_>>()));
                }
            }
        }
        Qualifier::WhyNot => {
            let sets: Vec<Vec<&str>> = pattern
                .args
                .iter()
                .enumerate()
                .map(|(i, t)| match t {
                    Term::Const(c) => vec![c.as_str()],
                    _ => doms.of(pred, i).iter().map(String::as_str).collect(),
                })
                .collect();
            for_each_product(&sets, &mut |t| {
                if pattern_matches(pattern, t) && statuses.status(pred, t) != Status::T {
                    out.insert(to_atom(t));
                }
            });
        }
    }
    Ok(out)
}

/// Checks the pattern against the program and returns the completed domains.
pub fn validate_question(
    question: &ProvQuestion,
    program: &Program,
    instance: &Instance,
    dom: &DomainAssignment,
) -> Result<DomainAssignment> {
    let pattern = &question.pattern;
    if !program.is_idb(&pattern.pred) {
        return Err(Error::NotIdb(pattern.pred.clone()));
    }
    let arity = program.arity(&pattern.pred).unwrap_or(0);
    if arity != pattern.arity() {
        return Err(Error::ArityMismatch { pred: pattern.pred.clone(), expected: arity, found: pattern.arity() });
    }
    let doms = program_domains(program, instance, dom)?;
    for (i, t) in pattern.args.iter().enumerate() {
        match t {
            Term::Const(c) if !doms.of(&pattern.pred, i).contains(c) => {
                return Err(Error::ConstantOutsideDomain {
                    attribute: format!("{}.{}", pattern.pred, i + 1),
                    value: c.clone(),
                })
            }
            Term::Func(..) => return Err(Error::Invalid("function term in question".into())),
            _ => {}
        }
    }
    Ok(doms)
}

/// Subgraph reachable from the matched tuple nodes.
pub fn extract_explanation(graph: &ProvGraph, matched: &BTreeSet<Atom>) -> ProvGraph {
    let roots = matched.iter().filter_map(|a| {
        let args = a.ground_args()?;
        graph.index_of(&NodeLabel::tuple(&a.pred, &args))
    });
    graph.reachable_from(roots)
}

/// Recomputes statuses bottom-up after fixing undetermined EDB tuples.
pub fn resolve_undetermined(graph: &ProvGraph, choices: &BTreeMap<NodeLabel, Status>) -> Result<ProvGraph> {
    let succ = graph.successors();
    for (label, choice) in choices {
        let idx = graph.index_of(label);
        let ok = idx.is_some_and(|i| {
            label.kind == NodeKind::Tuple && graph.status_at(i) == Status::U && succ[i].is_empty()
        });
        if !ok || *choice == Status::U {
            return Err(Error::NotUndetermined(label.to_string()));
        }
    }
    let mut out = graph.clone();
    if choices.is_empty() {
        return Ok(out);
    }
    let n = graph.node_count();
    let mut order = Vec::with_capacity(n);
    let mut state = vec![0u8; n];
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some((node, next)) = stack.pop() {
            if next < succ[node].len() {
                stack.push((node, next + 1));
                let child = succ[node][next];
                if state[child] == 0 {
                    state[child] = 1;
                    stack.push((child, 0));
                }
            } else {
                state[node] = 2;
                order.push(node);
            }
        }
    }
    let mut status: Vec<Status> = (0..n).map(|i| graph.status_at(i)).collect();
    for node in order {
        let label = graph.label(node);
        let children = &succ[node];
        let new = match label.kind {
            NodeKind::Tuple if children.is_empty() => choices.get(label).copied().unwrap_or(status[node]),
            NodeKind::Tuple => children.iter().fold(Status::F, |acc, &c| acc.or(status[c])),
            NodeKind::Rule if children.is_empty() => status[node],
            NodeKind::Rule => children.iter().fold(Status::T, |acc, &c| acc.and(status[c])),
            NodeKind::Goal => match children.first() {
                None => status[node],
                Some(&t) => {
                    let old_goal = graph.status_at(node);
                    let old_tuple = graph.status_at(t);
                    let negated = graph.is_negated_goal(label).unwrap_or(
                        old_goal != Status::U && old_goal != old_tuple,
                    );
                    if negated {
                        status[t].invert()
                    } else {
                        status[t]
                    }
                }
            },
            _ => status[node],
        };
        status[node] = new;
    }
    for (i, s) in status.into_iter().enumerate() {
        let label = graph.label(i).clone();
        out.set_status(&label, s);
    }
    Ok(out)
}

/// Tuple-only view of an explanation: each tuple points at the tuples of the
/// goals shown under its rule nodes.
pub fn which_projection(expl: &ProvGraph) -> ProvGraph {
    let succ = expl.successors();
    let mut out = ProvGraph::new();
    out.copy_metadata_from(expl);
    for (i, (label, status)) in expl.nodes().enumerate() {
        if label.kind == NodeKind::Tuple {
            let from = out.ensure_node(label.clone(), status);
            for &r in &succ[i] {
                for &g in &succ[r] {
                    for &t in &succ[g] {
                        let to = out.ensure_node(expl.label(t).clone(), expl.status_at(t));
                        out.add_edge_idx(from, to);
                    }
                }
            }
        }
    }
    out
}
