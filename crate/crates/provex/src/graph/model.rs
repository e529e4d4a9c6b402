//! Labeled graphs with per-node status, shared by explanations and games.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};
use serde::Serialize;

use super::label::{NodeKind, NodeLabel};
use crate::datalog::Status;

/// Status type of a node: T/F/U for explanations, W/L for games.
pub trait NodeStatus: Copy + Eq + fmt::Debug + fmt::Display {
    fn fill_color(self) -> &'static str;
    fn font_color(self) -> &'static str {
        "black"
    }
}

impl NodeStatus for Status {
    fn fill_color(self) -> &'static str {
        match self {
            Status::T => "green",
            Status::F => "darkred",
            Status::U => "lightyellow",
        }
    }

    fn font_color(self) -> &'static str {
        match self {
            Status::F => "white",
            _ => "black",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Graph<S> {
    nodes: IndexMap<NodeLabel, S>,
    edges: IndexSet<(u32, u32)>,
    /// Goals (rule id, position) known to be negated; informational only.
    negated_goals: BTreeSet<(Arc<str>, usize)>,
}

pub type ProvGraph = Graph<Status>;

impl<S> Default for Graph<S> {
    fn default() -> Self {
        Graph { nodes: IndexMap::new(), edges: IndexSet::new(), negated_goals: BTreeSet::new() }
    }
}

impl<S: NodeStatus> PartialEq for Graph<S> {
    fn eq(&self, other: &Self) -> bool {
        if self.nodes != other.nodes || self.edges.len() != other.edges.len() {
            return false;
        }
        let mine: HashSet<(&NodeLabel, &NodeLabel)> = self.edges().collect();
        other.edges().all(|e| mine.contains(&e))
    }
}

impl<S: NodeStatus> Eq for Graph<S> {}

impl<S: NodeStatus> Graph<S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node or overwrites its status; returns its index.
    pub fn add_node(&mut self, label: NodeLabel, status: S) -> usize {
        let (idx, _) = self.nodes.insert_full(label, status);
        idx
    }

    /// Adds a node only if absent; returns its index.
    pub fn ensure_node(&mut self, label: NodeLabel, status: S) -> usize {
        let entry = self.nodes.entry(label);
        let idx = entry.index();
        entry.or_insert(status);
        idx
    }

    pub fn add_edge_idx(&mut self, from: usize, to: usize) {
        self.edges.insert((from as u32, to as u32));
    }

    pub fn add_edge(&mut self, from: (NodeLabel, S), to: (NodeLabel, S)) {
        let a = self.ensure_node(from.0, from.1);
        let b = self.ensure_node(to.0, to.1);
        self.add_edge_idx(a, b);
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, label: &NodeLabel) -> Option<usize> {
        self.nodes.get_index_of(label)
    }

    pub fn status(&self, label: &NodeLabel) -> Option<S> {
        self.nodes.get(label).copied()
    }

    pub fn set_status(&mut self, label: &NodeLabel, status: S) -> bool {
        match self.nodes.get_mut(label) {
            Some(s) => {
                *s = status;
                true
            }
            None => false,
        }
    }

    pub fn label(&self, idx: usize) -> &NodeLabel {
        self.nodes.get_index(idx).expect("valid node index").0
    }

    pub fn status_at(&self, idx: usize) -> S {
        *self.nodes.get_index(idx).expect("valid node index").1
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeLabel, S)> {
        self.nodes.iter().map(|(l, s)| (l, *s))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&NodeLabel, &NodeLabel)> {
        self.edges.iter().map(|&(a, b)| (self.label(a as usize), self.label(b as usize)))
    }

    pub fn edge_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(a, b)| (a as usize, b as usize))
    }

    pub fn has_edge(&self, from: &NodeLabel, to: &NodeLabel) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(a), Some(b)) => self.edges.contains(&(a as u32, b as u32)),
            _ => false,
        }
    }

    /// Out-neighbours per node index.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (a, b) in self.edge_indices() {
            out[a].push(b);
        }
        out
    }

    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (a, b) in self.edge_indices() {
            out[b].push(a);
        }
        out
    }

    pub fn mark_negated_goal(&mut self, rule: &str, pos: usize) {
        self.negated_goals.insert((Arc::from(rule), pos));
    }

    pub fn negated_goals(&self) -> &BTreeSet<(Arc<str>, usize)> {
        &self.negated_goals
    }

    pub fn copy_metadata_from<T>(&mut self, other: &Graph<T>) {
        self.negated_goals = other.negated_goals.clone();
    }

    /// Whether the goal node points at its tuple with inverted polarity.
    pub fn is_negated_goal(&self, goal: &NodeLabel) -> Option<bool> {
        if self.negated_goals.contains(&(goal.name.clone(), goal.pos)) {
            return Some(true);
        }
        if self.negated_goals.iter().any(|(r, _)| *r == goal.name) {
            return Some(false);
        }
        None
    }

    /// Node-induced subgraph of everything reachable from `roots`.
    pub fn reachable_from(&self, roots: impl IntoIterator<Item = usize>) -> Self {
        let succ = self.successors();
        let mut seen = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for r in roots {
            if !seen[r] {
                seen[r] = true;
                queue.push_back(r);
            }
        }
        let mut order = Vec::new();
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for &m in &succ[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        let mut out = Self::new();
        out.negated_goals = self.negated_goals.clone();
        let mut map = vec![usize::MAX; self.nodes.len()];
        for &n in &order {
            map[n] = out.add_node(self.label(n).clone(), self.status_at(n));
        }
        for (a, b) in self.edge_indices() {
            if seen[a] && seen[b] {
                out.add_edge_idx(map[a], map[b]);
            }
        }
        out
    }

    /// Canonical `label:status` strings.
    pub fn node_strings(&self) -> BTreeSet<String> {
        self.nodes().map(|(l, s)| format!("{l}:{s}")).collect()
    }

    /// Sorted `src -> dst` lines with statuses.
    pub fn edge_lines(&self) -> Vec<String> {
        let strings: Vec<String> = self.nodes().map(|(l, s)| format!("{l}:{s}")).collect();
        let mut lines: Vec<String> = self
            .edge_indices()
            .map(|(a, b)| format!("{} -> {}", strings[a], strings[b]))
            .collect();
        lines.sort();
        lines
    }

    /// Edge list text: one sorted line per edge, each ending in a newline.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for line in self.edge_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.keys().filter(|l| l.kind == kind).count()
    }

    pub fn to_dot(&self) -> String {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        let strings: Vec<String> = self.nodes().map(|(l, s)| format!("{l}:{s}")).collect();
        order.sort_by(|a, b| strings[*a].cmp(&strings[*b]));
        let mut ids = vec![0; order.len()];
        for (i, &n) in order.iter().enumerate() {
            ids[n] = i;
        }
        let mut out = String::from("digraph provenance {\n  node [style=filled, fontname=\"Helvetica\"];\n");
        for &n in &order {
            let (label, status) = (self.label(n), self.status_at(n));
            let (shape, style) = match label.kind {
                NodeKind::Tuple | NodeKind::NegTuple => ("ellipse", "filled"),
                NodeKind::Rule => ("box", "filled"),
                NodeKind::Goal => ("box", "\"rounded,filled\""),
                NodeKind::EdbFact => ("box", "filled"),
            };
            let _ = writeln!(
                out,
                "  n{} [label=\"{}\", shape={}, style={}, fillcolor={}, fontcolor={}];",
                ids[n],
                escape(&label.short()),
                shape,
                style,
                status.fill_color(),
                status.font_color()
            );
        }
        let mut edges: Vec<(usize, usize)> = self.edge_indices().map(|(a, b)| (ids[a], ids[b])).collect();
        edges.sort();
        for (a, b) in edges {
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Node {
            label: String,
            kind: &'static str,
            status: String,
        }
        #[derive(Serialize)]
        struct Doc {
            nodes: Vec<Node>,
            edges: Vec<[String; 2]>,
        }
        let mut nodes: Vec<Node> = self
            .nodes()
            .map(|(l, s)| Node {
                label: l.to_string(),
                kind: match l.kind {
                    NodeKind::Tuple => "tuple",
                    NodeKind::Rule => "rule",
                    NodeKind::Goal => "goal",
                    NodeKind::NegTuple => "negated-tuple",
                    NodeKind::EdbFact => "fact",
                },
                status: s.to_string(),
            })
            .collect();
        nodes.sort_by(|a, b| a.label.cmp(&b.label));
        let mut edges: Vec<[String; 2]> = self.edges().map(|(a, b)| [a.to_string(), b.to_string()]).collect();
        edges.sort();
        serde_json::to_string_pretty(&Doc { nodes, edges }).expect("serializable") + "\n"
    }

    /// Node counts by kind, for summaries.
    pub fn kind_counts(&self) -> BTreeMap<NodeKind, usize> {
        let mut out = BTreeMap::new();
        for l in self.nodes.keys() {
            *out.entry(l.kind).or_insert(0) += 1;
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
