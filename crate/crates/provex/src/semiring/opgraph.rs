//! Operator graphs: explanations with rule nodes as products and tuple and
//! goal nodes as sums, specialised per semiring.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::poly::{Polynomial, SemiringKind};
use crate::datalog::{Atom, Instance, Status};
use crate::error::{Error, Result};
use crate::graph::{NodeKind, NodeLabel, ProvGraph};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Plus,
    Times,
    Var(String),
    One,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpNode {
    pub op: Op,
    /// Label of the explanation node this node stands for, if any.
    pub label: Option<NodeLabel>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpGraph {
    pub nodes: Vec<OpNode>,
    children: Vec<Vec<usize>>,
    /// Nodes for the explained tuples.
    pub roots: Vec<usize>,
}

impl OpGraph {
    pub fn add(&mut self, op: Op, label: Option<NodeLabel>) -> usize {
        self.nodes.push(OpNode { op, label });
        self.children.push(Vec::new());
        self.nodes.len() - 1
    }

    /// Adds an edge unless present.
    pub fn link(&mut self, from: usize, to: usize) {
        if !self.children[from].contains(&to) {
            self.children[from].push(to);
        }
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    /// Nodes reachable from the roots.
    pub fn reachable(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = self.roots.clone();
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(&self.children[n]);
            }
        }
        seen
    }

    pub fn root_for(&self, label: &NodeLabel) -> Option<usize> {
        self.roots.iter().copied().find(|&r| self.nodes[r].label.as_ref() == Some(label))
    }

    /// Evaluates `node` in semiring `kind`, normalising at every step.
    pub fn polynomial(&self, node: usize, kind: SemiringKind) -> Polynomial {
        let mut memo = BTreeMap::new();
        self.eval(node, kind, &mut memo)
    }

    fn eval(&self, node: usize, kind: SemiringKind, memo: &mut BTreeMap<usize, Polynomial>) -> Polynomial {
        if let Some(p) = memo.get(&node) {
            return p.clone();
        }
        let kids = &self.children[node];
        let p = match &self.nodes[node].op {
            Op::Var(v) => Polynomial::var(v),
            Op::One => Polynomial::one(),
            Op::Plus => kids.iter().fold(Polynomial::zero(), |acc, &c| &acc + &self.eval(c, kind, memo)),
            Op::Times => kids.iter().fold(Polynomial::one(), |acc, &c| &acc * &self.eval(c, kind, memo)),
        }
        .normalize(kind);
        memo.insert(node, p.clone());
        p
    }

    /// Number of operator and leaf nodes in the expression tree unfolded from
    /// `node`, with goal nodes passed through.
    pub fn expression_size(&self, node: usize) -> u64 {
        let mut memo = BTreeMap::new();
        self.tree_size(node, &mut memo)
    }

    fn tree_size(&self, node: usize, memo: &mut BTreeMap<usize, u64>) -> u64 {
        if let Some(&s) = memo.get(&node) {
            return s;
        }
        let is_goal = self.nodes[node].label.as_ref().is_some_and(|l| l.kind == NodeKind::Goal);
        let own = u64::from(!is_goal || self.children[node].is_empty());
        let s = self.children[node].iter().fold(own, |acc, &c| acc.saturating_add(self.tree_size(c, memo)));
        memo.insert(node, s);
        s
    }

    /// The unexpanded expression rooted at `node`; one-child sums and products
    /// are elided and the operands of each operator are sorted.
    pub fn expression(&self, node: usize) -> String {
        let mut memo = BTreeMap::new();
        self.render(node, &mut memo).0
    }

    /// Renders a node, returning the text and whether it is a bare sum.
    fn render(&self, node: usize, memo: &mut BTreeMap<usize, (String, bool)>) -> (String, bool) {
        if let Some(r) = memo.get(&node) {
            return r.clone();
        }
        let kids = &self.children[node];
        let out = match &self.nodes[node].op {
            Op::Var(v) => (v.clone(), false),
            Op::One => ("1".to_string(), false),
            _ if kids.len() == 1 => self.render(kids[0], memo),
            Op::Plus if kids.is_empty() => ("0".to_string(), false),
            Op::Times if kids.is_empty() => ("1".to_string(), false),
            Op::Plus => {
                let mut parts: Vec<String> = kids.iter().map(|&c| self.render(c, memo).0).collect();
                parts.sort();
                (parts.join(" + "), true)
            }
            Op::Times => {
                let mut parts: Vec<String> = kids
                    .iter()
                    .map(|&c| match self.render(c, memo) {
                        (s, true) => format!("({s})"),
                        (s, false) => s,
                    })
                    .collect();
                parts.sort();
                (parts.join(" * "), false)
            }
        };
        memo.insert(node, out.clone());
        out
    }

    /// Canonical bottom-up form of each node; equal forms mean isomorphic subgraphs.
    pub fn canonical_forms(&self) -> Vec<String> {
        let mut memo: Vec<Option<String>> = vec![None; self.nodes.len()];
        for n in 0..self.nodes.len() {
            self.canon(n, &mut memo);
        }
        memo.into_iter().map(Option::unwrap_or_default).collect()
    }

    fn canon(&self, node: usize, memo: &mut Vec<Option<String>>) -> String {
        if let Some(s) = &memo[node] {
            return s.clone();
        }
        let mut kids: Vec<String> = self.children[node].iter().map(|&c| self.canon(c, memo)).collect();
        kids.sort();
        let s = match &self.nodes[node].op {
            Op::Var(v) => v.clone(),
            Op::One => "1".into(),
            Op::Plus => format!("+({})", kids.join(",")),
            Op::Times => format!("*({})", kids.join(",")),
        };
        memo[node] = Some(s.clone());
        s
    }

    /// Drops children of `+` nodes that are isomorphic to an earlier sibling.
    fn collapse_isomorphic(&mut self) {
        let forms = self.canonical_forms();
        for n in 0..self.nodes.len() {
            if self.nodes[n].op == Op::Plus {
                let mut seen = BTreeSet::new();
                self.children[n].retain(|&c| seen.insert(forms[c].clone()));
            }
        }
    }

    /// Replaces goal `+` nodes by their tuple child (or drops them when they have none).
    fn drop_goals(&mut self) {
        for n in 0..self.nodes.len() {
            if self.nodes[n].op != Op::Times {
                continue;
            }
            let mut kids = Vec::new();
            for &c in &self.children[n] {
                let is_goal = self.nodes[c].label.as_ref().is_some_and(|l| l.kind == NodeKind::Goal);
                if is_goal {
                    for &t in &self.children[c] {
                        if !kids.contains(&t) {
                            kids.push(t);
                        }
                    }
                } else if !kids.contains(&c) {
                    kids.push(c);
                }
            }
            self.children[n] = kids;
        }
    }

    /// Removes `·` children of a `+` node whose child set strictly contains a sibling's.
    fn absorb(&mut self) {
        let forms = self.canonical_forms();
        for n in 0..self.nodes.len() {
            if self.nodes[n].op != Op::Plus {
                continue;
            }
            let sets: Vec<(usize, BTreeSet<&str>)> = self.children[n]
                .iter()
                .filter(|&&c| self.nodes[c].op == Op::Times)
                .map(|&c| (c, self.children[c].iter().map(|&k| forms[k].as_str()).collect()))
                .collect();
            let drop: BTreeSet<usize> = sets
                .iter()
                .filter(|(_, s)| sets.iter().any(|(_, o)| o.len() < s.len() && o.is_subset(s)))
                .map(|(c, _)| *c)
                .collect();
            self.children[n].retain(|c| !drop.contains(c));
        }
    }

    /// Restricts the graph to nodes reachable from the roots, renumbering them.
    fn compact(&self) -> OpGraph {
        let keep: Vec<usize> = self.reachable().into_iter().collect();
        let map: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut out = OpGraph::default();
        for &n in &keep {
            out.add(self.nodes[n].op.clone(), self.nodes[n].label.clone());
        }
        for &n in &keep {
            for &c in &self.children[n] {
                out.link(map[&n], map[&c]);
            }
        }
        out.roots = self.roots.iter().map(|r| map[r]).collect();
        out
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph provenance {\n  rankdir=TB;\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let (text, shape) = match &n.op {
                Op::Plus => ("+".to_string(), "ellipse"),
                Op::Times => ("·".to_string(), "box"),
                Op::Var(v) => (v.clone(), "ellipse"),
                Op::One => ("1".to_string(), "plaintext"),
            };
            let text = match (&n.label, &n.op) {
                (Some(l), Op::Plus) if l.kind == NodeKind::Tuple => format!("{} (+)", l.short()),
                (Some(l), Op::Var(v)) => format!("{} ({v})", l.short()),
                _ => text,
            };
            let _ = writeln!(out, "  n{i} [label=\"{}\", shape={shape}];", text.replace('"', "\\\""));
        }
        for (i, kids) in self.children.iter().enumerate() {
            for c in kids {
                let _ = writeln!(out, "  n{i} -> n{c};");
            }
        }
        out.push_str("}\n");
        out
    }
}

fn check_positive(expl: &ProvGraph) -> Result<()> {
    if !expl.negated_goals().is_empty() {
        return Err(Error::NegationPresent);
    }
    if let Some((l, s)) = expl.nodes().find(|(_, s)| *s != Status::T) {
        return Err(Error::Invalid(format!("semiring provenance needs successful derivations, {l} has status {s}")));
    }
    Ok(())
}

fn annotation_of(label: &NodeLabel, annots: &Instance) -> Result<String> {
    annots
        .annotation(&label.name, &label.args_vec())
        .map(str::to_string)
        .ok_or_else(|| Error::MissingAnnotation(label.short()))
}

/// The N[X] operator graph: IDB tuples and goals are sums, rules products,
/// EDB leaves carry their annotation variable.
fn nx_graph(expl: &ProvGraph, annots: &Instance) -> Result<OpGraph> {
    check_positive(expl)?;
    let succ = expl.successors();
    let preds = expl.predecessors();
    let mut g = OpGraph::default();
    for (i, (label, _)) in expl.nodes().enumerate() {
        let op = match label.kind {
            NodeKind::Tuple if succ[i].is_empty() => Op::Var(annotation_of(label, annots)?),
            NodeKind::Tuple => Op::Plus,
            NodeKind::Rule => Op::Times,
            NodeKind::Goal if succ[i].is_empty() => Op::One,
            NodeKind::Goal => Op::Plus,
            _ => return Err(Error::Invalid(format!("unexpected node {label} in an explanation"))),
        };
        g.add(op, Some(label.clone()));
        if label.kind == NodeKind::Tuple && preds[i].is_empty() {
            g.roots.push(i);
        }
    }
    for (a, b) in expl.edge_indices() {
        g.link(a, b);
    }
    Ok(g)
}

/// Builds the operator graph of a positive explanation for semiring `kind`.
pub fn transform_graph(expl: &ProvGraph, kind: SemiringKind, annots: &Instance) -> Result<OpGraph> {
    let mut g = nx_graph(expl, annots)?;
    match kind {
        SemiringKind::NX => {}
        SemiringKind::BX => g.collapse_isomorphic(),
        SemiringKind::Trio => g.drop_goals(),
        SemiringKind::Why => {
            g.drop_goals();
            g.collapse_isomorphic();
        }
        SemiringKind::PosBool => {
            g.drop_goals();
            g.collapse_isomorphic();
            g.absorb();
        }
        SemiringKind::Which => {
            let mut out = OpGraph::default();
            let mut leaves: BTreeMap<usize, usize> = BTreeMap::new();
            for &r in &g.roots {
                let root = out.add(Op::Plus, g.nodes[r].label.clone());
                out.roots.push(root);
                let mut seen = BTreeSet::new();
                let mut stack = vec![r];
                while let Some(n) = stack.pop() {
                    if !seen.insert(n) {
                        continue;
                    }
                    if let Op::Var(v) = &g.nodes[n].op {
                        let leaf =
                            *leaves.entry(n).or_insert_with(|| out.add(Op::Var(v.clone()), g.nodes[n].label.clone()));
                        out.link(root, leaf);
                    }
                    stack.extend(g.children(n));
                }
            }
            return Ok(out);
        }
    }
    Ok(g.compact())
}

/// The N[X] annotation of `root` read from its explanation.
pub fn extract_polynomial(expl: &ProvGraph, root: &Atom, annots: &Instance) -> Result<Polynomial> {
    let g = nx_graph(expl, annots)?;
    let args = root.ground_args().ok_or_else(|| Error::Invalid(format!("{root} is not ground")))?;
    let label = NodeLabel::tuple(&root.pred, &args);
    let Some(idx) = expl.index_of(&label) else {
        return Err(Error::Invalid(format!("{label} is not part of the explanation")));
    };
    Ok(g.polynomial(idx, SemiringKind::NX))
}
