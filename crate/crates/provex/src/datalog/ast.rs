//! Abstract syntax for non-recursive Datalog with negation and comparisons.

use std::collections::BTreeSet;
use std::fmt;

/// A rule argument. `Func` terms only occur in heads of generated programs:
/// `neg(V)` flips a boolean constant, any other functor builds a Skolem value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
    Func(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(value: impl Into<String>) -> Term {
        Term::Const(value.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_const(&self) -> Option<&str> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Term::Const(_) => {}
            Term::Func(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }
}

/// Writes a constant, quoting it unless it is a plain lowercase identifier or number.
pub fn fmt_const(f: &mut impl fmt::Write, c: &str) -> fmt::Result {
    if is_bare_const(c) {
        f.write_str(c)
    } else {
        f.write_char('"')?;
        for ch in c.chars() {
            if ch == '"' || ch == '\\' {
                f.write_char('\\')?;
            }
            f.write_char(ch)?;
        }
        f.write_char('"')
    }
}

pub(crate) fn is_bare_const(c: &str) -> bool {
    let mut chars = c.chars();
    match chars.next() {
        Some(ch) if ch.is_ascii_lowercase() || ch.is_ascii_digit() => {}
        Some('-') if c.len() > 1 && c[1..].chars().all(|d| d.is_ascii_digit()) => return true,
        _ => return false,
    }
    let bare = chars.all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
    bare && c != "not"
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => fmt_const(f, c),
            Term::Func(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Atom {
        Atom { pred: pred.into(), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.args.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|a| matches!(a, Term::Const(_)))
    }

    /// Constant values of a ground atom.
    pub fn ground_args(&self) -> Option<Vec<String>> {
        self.args
            .iter()
            .map(|a| a.as_const().map(str::to_string))
            .collect()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        write_list(f, &self.args)?;
        f.write_str(")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator whose result is the complement of this one.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn holds(self, left: &str, right: &str) -> bool {
        let ord = compare_values(left, right);
        match self {
            CmpOp::Eq => left == right,
            CmpOp::Ne => left != right,
            CmpOp::Lt => ord.is_lt(),
            CmpOp::Le => ord.is_le(),
            CmpOp::Gt => ord.is_gt(),
            CmpOp::Ge => ord.is_ge(),
        }
    }

    pub fn parse(s: &str) -> Option<CmpOp> {
        Some(match s {
            "=" => CmpOp::Eq,
            "!=" | "≠" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" | "≤" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" | "≥" => CmpOp::Ge,
            _ => return None,
        })
    }
}

/// Numeric order when both sides are integers, lexicographic otherwise.
pub fn compare_values(left: &str, right: &str) -> std::cmp::Ordering {
    match (left.parse::<i64>(), right.parse::<i64>()) {
        (Ok(a), Ok(b)) if a != b || left == right => a.cmp(&b),
        _ => left.cmp(right),
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp(Term, CmpOp, Term),
}

impl Literal {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            Literal::Cmp(..) => None,
        }
    }

    pub fn atom_mut(&mut self) -> Option<&mut Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            Literal::Cmp(..) => None,
        }
    }

    pub fn is_negated(&self) -> bool {
        matches!(self, Literal::Neg(_))
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self, Literal::Cmp(..))
    }

    /// Arguments as they appear in a goal node label.
    pub fn args(&self) -> Vec<&Term> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.args.iter().collect(),
            Literal::Cmp(l, _, r) => vec![l, r],
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for t in self.args() {
            t.collect_vars(&mut out);
        }
        out
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Literal {
        let map_atom = |a: &Atom, f: &mut dyn FnMut(&Term) -> Term| Atom {
            pred: a.pred.clone(),
            args: a.args.iter().map(f).collect(),
        };
        match self {
            Literal::Pos(a) => Literal::Pos(map_atom(a, f)),
            Literal::Neg(a) => Literal::Neg(map_atom(a, f)),
            Literal::Cmp(l, op, r) => Literal::Cmp(f(l), *op, f(r)),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Cmp(l, op, r) => write!(f, "{l} {op} {r}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub id: String,
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(id: impl Into<String>, head: Atom, body: Vec<Literal>) -> Rule {
        Rule { id: id.into(), head, body }
    }

    /// Rule variables: head variables first, then body variables by first appearance.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.head.args.iter().for_each(|a| a.collect_vars(&mut out));
        for lit in &self.body {
            for t in lit.args() {
                t.collect_vars(&mut out);
            }
        }
        out
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Rule {
        Rule {
            id: self.id.clone(),
            head: Atom::new(self.head.pred.clone(), self.head.args.iter().map(&mut *f).collect()),
            body: self.body.iter().map(|l| l.map_terms(f)).collect(),
        }
    }

    pub fn is_positive(&self) -> bool {
        !self.body.iter().any(Literal::is_negated)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} :- ", self.id, self.head)?;
        for (i, lit) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{lit}")?;
        }
        f.write_str(".")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub answer: String,
}

impl Program {
    pub fn idb_preds(&self) -> BTreeSet<&str> {
        self.rules.iter().map(|r| r.head.pred.as_str()).collect()
    }

    pub fn is_idb(&self, pred: &str) -> bool {
        self.rules.iter().any(|r| r.head.pred == pred)
    }

    pub fn edb_preds(&self) -> BTreeSet<&str> {
        let idb = self.idb_preds();
        self.rules
            .iter()
            .flat_map(|r| r.body.iter().filter_map(Literal::atom))
            .map(|a| a.pred.as_str())
            .filter(|p| !idb.contains(p))
            .collect()
    }

    pub fn rules_for<'a>(&'a self, pred: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.head.pred == pred)
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Arity of a predicate as used anywhere in the program.
    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.rules.iter().find_map(|r| {
            if r.head.pred == pred {
                return Some(r.head.arity());
            }
            r.body
                .iter()
                .filter_map(Literal::atom)
                .find(|a| a.pred == pred)
                .map(Atom::arity)
        })
    }

    pub fn is_positive(&self) -> bool {
        self.rules.iter().all(Rule::is_positive)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}
