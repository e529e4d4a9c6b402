//! The full pipeline: rewrite, evaluate, decode edges into a graph.

use std::fmt::Write;

use super::annotate::annotate_program;
use super::connect::{add_connectivity, Connected};
use super::edges::{add_edge_rules, add_which_edge_rules, EdgeProgram, EDGE, NODE};
use super::firing::{create_firing_rules, Firing};
use super::unify::{unify_program, Unified};
use crate::datalog::{DomainAssignment, Instance, Literal, Model, Program, ValueRef};
use crate::error::{Error, Result};
use crate::graph::{
    build_full_graph, extract_explanation, match_question, validate_question, which_projection, NodeLabel,
    ProvGraph,
};
use crate::question::ProvQuestion;

/// Shape of the returned explanation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ExplainKind {
    /// Tuple, rule and goal nodes.
    #[default]
    Full,
    /// Tuple nodes only, linked head to body.
    Which,
}

/// Every intermediate stage of the rewriting.
#[derive(Clone, Debug)]
pub struct Rewrite {
    pub kind: ExplainKind,
    pub unified: Unified,
    pub annotated: Unified,
    pub firing: Firing,
    pub connected: Connected,
    pub edges: EdgeProgram,
}

/// Runs the rewriting stages for `question` without evaluating anything.
pub fn rewrite(
    program: &Program,
    instance: &Instance,
    dom: &DomainAssignment,
    question: &ProvQuestion,
    kind: ExplainKind,
) -> Result<Rewrite> {
    if kind == ExplainKind::Which && !program.is_positive() {
        return Err(Error::NegationNotSupported);
    }
    let doms = validate_question(question, program, instance, dom)?;
    let unified = unify_program(program, question)?;
    let annotated = annotate_program(&unified);
    let firing = create_firing_rules(&annotated, program, &doms);
    let connected = add_connectivity(&firing, &annotated);
    let edges = match kind {
        ExplainKind::Full => add_edge_rules(&connected, &annotated, program),
        ExplainKind::Which => add_which_edge_rules(&connected, &annotated, program),
    };
    Ok(Rewrite { kind, unified, annotated, firing, connected, edges })
}

impl Rewrite {
    /// Evaluates the edge program over `instance` and decodes the graph.
    pub fn evaluate(&self, program: &Program, instance: &Instance) -> Result<ProvGraph> {
        let generated = &self.edges.program;
        let mut model = Model::from_instance(instance);
        for (pred, values) in &self.firing.doms {
            model.declare(pred, 1);
            for v in values {
                model.insert(pred, &[v]);
            }
        }
        // Firing relations without rules (nothing unified) are empty.
        for rule in &generated.rules {
            for atom in rule.body.iter().filter_map(Literal::atom) {
                if !generated.is_idb(&atom.pred) && !model.has_relation(&atom.pred) && is_generated(&atom.pred) {
                    model.declare(&atom.pred, atom.arity());
                }
            }
        }
        model.run(generated)?;
        let mut graph = ProvGraph::new();
        mark_negated_goals(&mut graph, program);
        if model.has_relation(NODE) {
            for row in model.rows(NODE) {
                let (label, status) = self.decode(&model, row[0])?;
                graph.ensure_node(label, status);
            }
        }
        if model.has_relation(EDGE) {
            for row in model.rows(EDGE) {
                let from = self.decode(&model, row[0])?;
                let to = self.decode(&model, row[1])?;
                let a = graph.ensure_node(from.0, from.1);
                let b = graph.ensure_node(to.0, to.1);
                graph.add_edge_idx(a, b);
            }
        }
        Ok(graph)
    }

    fn decode(&self, model: &Model, sym: crate::datalog::Sym) -> Result<(NodeLabel, crate::datalog::Status)> {
        let ValueRef::Skolem(functor, args) = model.resolve(sym) else {
            return Err(Error::Invalid(format!("edge endpoint {} is not a node id", model.display(sym))));
        };
        let info = self
            .edges
            .functors
            .get(functor)
            .ok_or_else(|| Error::Invalid(format!("unknown node functor {functor}")))?;
        let args: Vec<String> = args.iter().map(|&a| model.display(a)).collect();
        Ok((NodeLabel::new(info.kind, &info.name, info.pos, &args), info.status))
    }

    /// Human-readable dump of every stage.
    pub fn stages(&self, program: &Program) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "% unified\n{}", self.unified.display(program));
        let _ = writeln!(out, "% annotated\n{}", self.annotated.display(program));
        let _ = writeln!(out, "% firing\n{}", self.firing.program);
        let connected = &self.connected.program.rules[self.firing.program.rules.len()..];
        let _ = writeln!(out, "% connectivity");
        for r in connected {
            let _ = writeln!(out, "{r}");
        }
        let edges = &self.edges.program.rules[self.connected.program.rules.len()..];
        let _ = writeln!(out, "\n% edges");
        for r in edges {
            let _ = writeln!(out, "{r}");
        }
        out
    }
}

fn is_generated(pred: &str) -> bool {
    pred.starts_with("FIRE_") || pred.starts_with("CONN_") || pred.starts_with("DOM_")
}

fn mark_negated_goals(graph: &mut ProvGraph, program: &Program) {
    for rule in &program.rules {
        for (j, lit) in rule.body.iter().enumerate() {
            if lit.is_negated() {
                graph.mark_negated_goal(&rule.id, j + 1);
            }
        }
    }
}

/// Answers `question` by rewriting. Instances with undetermined tuples are
/// answered by direct construction, since firing rules are two-valued.
pub fn explain(
    program: &Program,
    instance: &Instance,
    dom: &DomainAssignment,
    question: &ProvQuestion,
    kind: ExplainKind,
) -> Result<ProvGraph> {
    if instance.has_undetermined() {
        if kind == ExplainKind::Which && !program.is_positive() {
            return Err(Error::NegationNotSupported);
        }
        let full = build_full_graph(program, instance, dom)?;
        let expl = extract_explanation(&full, &match_question(question, program, instance, dom)?);
        return Ok(match kind {
            ExplainKind::Full => expl,
            ExplainKind::Which => which_projection(&expl),
        });
    }
    rewrite(program, instance, dom, question, kind)?.evaluate(program, instance)
}
