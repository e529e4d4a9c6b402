//! Reading dual polynomials off provenance graphs of translated programs.

use std::collections::{BTreeMap, BTreeSet};

use super::formula::Formula;
use super::kinter::{dual_reduce, instance_of_interpretation, uniform_domains, KInterpretation, DOM};
use super::translate::{translate, Translation, ANSWER};
use crate::datalog::{Atom, Instance, Literal, Term};
use crate::error::{Error, Result};
use crate::graph::{build_full_graph, NodeKind, NodeLabel, ProvGraph};
use crate::semiring::Polynomial;

struct Extractor<'a> {
    graph: &'a ProvGraph,
    succ: Vec<Vec<usize>>,
    pi: &'a KInterpretation,
    translation: &'a Translation,
    memo: BTreeMap<usize, Polynomial>,
}

impl Extractor<'_> {
    fn eval(&mut self, node: usize) -> Result<Polynomial> {
        if let Some(p) = self.memo.get(&node) {
            return Ok(p.clone());
        }
        let label = self.graph.label(node).clone();
        let program = &self.translation.program;
        let p = match label.kind {
            NodeKind::Tuple if &*label.name == DOM => Polynomial::one(),
            NodeKind::Tuple if program.is_idb(&label.name) => {
                let product = self.translation.aux.contains(&*label.name);
                self.fold(node, product)?
            }
            NodeKind::Tuple => self.pi.row(&label.name, &label.args_vec()).pos.polynomial(),
            NodeKind::Rule => self.fold(node, true)?,
            NodeKind::Goal => {
                let lit = program
                    .rule(&label.name)
                    .and_then(|r| r.body.get(label.pos.wrapping_sub(1)))
                    .ok_or_else(|| Error::NotTranslatedProgram(format!("no goal for {label}")))?;
                let args = label.args_vec();
                match lit {
                    Literal::Cmp(_, op, _) if op.holds(&args[0], &args[1]) => Polynomial::one(),
                    Literal::Cmp(..) => Polynomial::zero(),
                    Literal::Pos(a) if a.pred == DOM => Polynomial::one(),
                    Literal::Pos(a) if !program.is_idb(&a.pred) => self.pi.row(&a.pred, &args).pos.polynomial(),
                    Literal::Neg(a) if !program.is_idb(&a.pred) => self.pi.row(&a.pred, &args).neg.polynomial(),
                    _ => self.fold(node, false)?,
                }
            }
            NodeKind::NegTuple | NodeKind::EdbFact => {
                return Err(Error::NotTranslatedProgram(format!("unexpected node {label}")));
            }
        };
        let p = dual_reduce(&p);
        self.memo.insert(node, p.clone());
        Ok(p)
    }

    fn fold(&mut self, node: usize, product: bool) -> Result<Polynomial> {
        let mut acc = if product { Polynomial::one() } else { Polynomial::zero() };
        for c in self.succ[node].clone() {
            let v = self.eval(c)?;
            acc = if product { dual_reduce(&(&acc * &v)) } else { &acc + &v };
        }
        Ok(acc)
    }
}

/// The dual polynomial encoded by the subgraph of `graph` rooted at `root`.
pub fn extract_dual(graph: &ProvGraph, root: &Atom, pi: &KInterpretation, translation: &Translation) -> Result<Polynomial> {
    if !translation.program.is_idb(&root.pred) {
        return Err(Error::NotTranslatedProgram(format!("{} is not a translated predicate", root.pred)));
    }
    let args = root.ground_args().ok_or_else(|| Error::Invalid(format!("{root} is not ground")))?;
    let idx = graph
        .index_of(&NodeLabel::tuple(&root.pred, &args))
        .ok_or_else(|| Error::Invalid(format!("{root} is not in the graph")))?;
    let mut ex = Extractor { graph, succ: graph.successors(), pi, translation, memo: BTreeMap::new() };
    ex.eval(idx)
}

/// Everything produced while answering a formula over a K-interpretation.
#[derive(Clone, Debug)]
pub struct DualExplanation {
    pub translation: Translation,
    pub instance: Instance,
    pub root: Atom,
    /// Subgraph of the provenance graph rooted at `root`.
    pub graph: ProvGraph,
    pub polynomial: Polynomial,
}

/// Translates `formula`, builds the instance of `pi`, and extracts the dual
/// polynomial of the answer tuple for valuation `nu` of the free variables.
pub fn explain_formula(
    formula: &Formula,
    pi: &KInterpretation,
    domain: &BTreeSet<String>,
    nu: &BTreeMap<String, String>,
) -> Result<DualExplanation> {
    let translation = translate(formula)?;
    let mut instance = instance_of_interpretation(pi, domain)?;
    for (pred, arity) in translation.formula.predicates() {
        instance.declare(&pred, arity)?;
    }
    if let Some(c) = translation.formula.constants().into_iter().find(|c| !domain.contains(c)) {
        return Err(Error::ConstantOutsideDomain { attribute: DOM.into(), value: c });
    }
    let free = translation.formula.free_vars();
    let args = free
        .iter()
        .map(|v| nu.get(v).cloned().ok_or_else(|| Error::Invalid(format!("no value for free variable {v}"))))
        .collect::<Result<Vec<_>>>()?;
    let root = Atom::new(ANSWER, args.iter().map(Term::constant).collect());
    let dom = uniform_domains(&instance, domain);
    let full = build_full_graph(&translation.program, &instance, &dom)?;
    let idx = full
        .index_of(&NodeLabel::tuple(ANSWER, &args))
        .ok_or_else(|| Error::ConstantOutsideDomain { attribute: DOM.into(), value: args.join(",") })?;
    let graph = full.reachable_from([idx]);
    let polynomial = extract_dual(&graph, &root, pi, &translation)?;
    Ok(DualExplanation { translation, instance, root, graph, polynomial })
}
