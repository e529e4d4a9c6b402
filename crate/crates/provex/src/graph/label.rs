//! Node labels with an injective canonical string form.

use std::fmt;
use std::sync::Arc;

use crate::datalog::fmt_const;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Tuple,
    Rule,
    Goal,
    NegTuple,
    EdbFact,
}

impl NodeKind {
    fn prefix(self) -> &'static str {
        match self {
            NodeKind::Tuple => "REL",
            NodeKind::Rule => "RULE",
            NodeKind::Goal => "GOAL",
            NodeKind::NegTuple => "NOT_REL",
            NodeKind::EdbFact => "FACT",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeLabel {
    pub kind: NodeKind,
    /// Predicate for tuple-like nodes, rule id for rule and goal nodes.
    pub name: Arc<str>,
    /// 1-based goal position; 0 for other kinds.
    pub pos: usize,
    pub args: Vec<Arc<str>>,
}

impl NodeLabel {
    pub fn new<S: AsRef<str>>(kind: NodeKind, name: &str, pos: usize, args: &[S]) -> NodeLabel {
        NodeLabel {
            kind,
            name: Arc::from(name),
            pos,
            args: args.iter().map(|a| Arc::from(a.as_ref())).collect(),
        }
    }

    pub fn tuple<S: AsRef<str>>(pred: &str, args: &[S]) -> NodeLabel {
        NodeLabel::new(NodeKind::Tuple, pred, 0, args)
    }

    pub fn rule<S: AsRef<str>>(rule: &str, args: &[S]) -> NodeLabel {
        NodeLabel::new(NodeKind::Rule, rule, 0, args)
    }

    pub fn goal<S: AsRef<str>>(rule: &str, pos: usize, args: &[S]) -> NodeLabel {
        NodeLabel::new(NodeKind::Goal, rule, pos, args)
    }

    pub fn with_kind(&self, kind: NodeKind) -> NodeLabel {
        NodeLabel { kind, ..self.clone() }
    }

    pub fn args_vec(&self) -> Vec<String> {
        self.args.iter().map(|a| a.to_string()).collect()
    }

    /// Human-oriented text without the kind prefix, e.g. `Q(n,s)` or `r1.3(n,s)`.
    pub fn short(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.name);
        if self.kind == NodeKind::Goal {
            s.push('.');
            s.push_str(&self.pos.to_string());
        }
        self.write_args(&mut s).expect("writing to a string");
        match self.kind {
            NodeKind::NegTuple => format!("¬{s}"),
            NodeKind::EdbFact => format!("r_{s}"),
            _ => s,
        }
    }

    fn write_args(&self, f: &mut impl fmt::Write) -> fmt::Result {
        f.write_char('(')?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_char(',')?;
            }
            fmt_const(f, a)?;
        }
        f.write_char(')')
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.prefix(), self.name)?;
        if self.kind == NodeKind::Goal {
            write!(f, ".{}", self.pos)?;
        }
        self.write_args(f)
    }
}
