//! Top-down unification of rules with the question pattern and the goals
//! they reach.

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;

use crate::datalog::{Atom, Program, Rule, Term};
use crate::error::{Error, Result};
use crate::question::ProvQuestion;

/// Which derivations of a unified rule may appear in the explanation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Annotation {
    T,
    F,
    FT,
}

impl Annotation {
    pub fn join(self, other: Annotation) -> Annotation {
        if self == other {
            self
        } else {
            Annotation::FT
        }
    }

    pub fn invert(self) -> Annotation {
        match self {
            Annotation::T => Annotation::F,
            Annotation::F => Annotation::T,
            Annotation::FT => Annotation::FT,
        }
    }

    pub fn has_t(self) -> bool {
        self != Annotation::F
    }

    pub fn has_f(self) -> bool {
        self != Annotation::T
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Annotation::T => "T",
            Annotation::F => "F",
            Annotation::FT => "FT",
        })
    }
}

/// A copy of a program rule with some variables bound by unification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnifiedRule {
    /// Id of the rule this copy was made from.
    pub base: String,
    /// One term per base rule variable, in `Rule::vars` order.
    pub terms: Vec<Term>,
    /// The base rule with `terms` substituted.
    pub rule: Rule,
    pub annotation: Option<Annotation>,
    pub goal_annotations: Vec<Option<Annotation>>,
}

impl UnifiedRule {
    /// Bindings that differ from the identity, as `(variable, term)` pairs.
    pub fn binding<'a>(&'a self, base: &'a Rule) -> Vec<(&'a str, &'a Term)> {
        base.vars()
            .into_iter()
            .zip(&self.terms)
            .filter(|(v, t)| t.as_var() != Some(*v))
            .collect()
    }

    /// The copy in the form `r1^(X=n,Y=s): Q(n,s) :- ...`, with annotations when present.
    pub fn display(&self, base: &Rule) -> String {
        let mut s = self.base.clone();
        let binding = self.binding(base);
        if !binding.is_empty() {
            let parts: Vec<String> = binding.iter().map(|(v, t)| format!("{v}={t}")).collect();
            s.push_str(&format!("^({})", parts.join(",")));
        }
        if let Some(a) = self.annotation {
            s.push_str(&format!("[{a}]"));
        }
        s.push_str(&format!(": {} :- ", self.rule.head));
        let goals: Vec<String> = self
            .rule
            .body
            .iter()
            .zip(&self.goal_annotations)
            .map(|(g, a)| match a {
                Some(a) => format!("{g}[{a}]"),
                None => g.to_string(),
            })
            .collect();
        s.push_str(&goals.join(", "));
        s.push('.');
        s
    }
}

/// A goal of a parent copy unified with the head of a child copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub parent: usize,
    /// Zero-based body position in the parent.
    pub goal: usize,
    pub child: usize,
}

/// Result of unifying a program with a question.
#[derive(Clone, Debug)]
pub struct Unified {
    pub question: ProvQuestion,
    pub copies: Vec<UnifiedRule>,
    /// Copies whose head unifies with the question pattern.
    pub roots: Vec<usize>,
    pub links: Vec<Link>,
}

impl Unified {
    pub fn children(&self, parent: usize, goal: usize) -> impl Iterator<Item = usize> + '_ {
        self.links
            .iter()
            .filter(move |l| l.parent == parent && l.goal == goal)
            .map(|l| l.child)
    }

    pub fn display(&self, program: &Program) -> String {
        let mut out = String::new();
        for c in &self.copies {
            let base = program.rule(&c.base).expect("copies come from the program");
            out.push_str(&c.display(base));
            out.push('\n');
        }
        out
    }
}

/// Union-find over variable names with optional constant per class.
#[derive(Default)]
struct Classes {
    parent: BTreeMap<String, String>,
    value: BTreeMap<String, String>,
}

impl Classes {
    fn find(&mut self, v: &str) -> String {
        let mut cur = v.to_string();
        while let Some(p) = self.parent.get(&cur) {
            if *p == cur {
                break;
            }
            cur = p.clone();
        }
        let root = cur;
        let mut cur = v.to_string();
        while cur != root {
            let next = self.parent.insert(cur.clone(), root.clone()).unwrap_or_else(|| root.clone());
            cur = next;
        }
        root
    }

    fn bind(&mut self, v: &str, c: &str) -> bool {
        let root = self.find(v);
        match self.value.get(&root) {
            Some(old) => old == c,
            None => {
                self.value.insert(root, c.to_string());
                true
            }
        }
    }

    fn union(&mut self, a: &str, b: &str) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        let (va, vb) = (self.value.get(&ra).cloned(), self.value.get(&rb).cloned());
        if let (Some(x), Some(y)) = (&va, &vb) {
            if x != y {
                return false;
            }
        }
        self.parent.insert(ra.clone(), rb.clone());
        if let Some(x) = va {
            self.value.insert(rb, x);
        }
        true
    }

    fn unify(&mut self, a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::Var(v), Term::Const(c)) | (Term::Const(c), Term::Var(v)) => self.bind(v, c),
            (Term::Var(x), Term::Var(y)) => self.union(x, y),
            _ => false,
        }
    }

    fn unify_all(&mut self, a: &[Term], b: &[Term]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| self.unify(x, y))
    }

    /// Resolves a term to its class constant or to the class representative among `order`.
    fn resolve(&mut self, t: &Term, reps: &BTreeMap<String, String>) -> Term {
        match t {
            Term::Var(v) => {
                let root = self.find(v);
                match self.value.get(&root) {
                    Some(c) => Term::Const(c.clone()),
                    None => Term::Var(reps.get(&root).cloned().unwrap_or_else(|| v.clone())),
                }
            }
            other => other.clone(),
        }
    }
}

/// Most general unifier of two argument lists, applied to both sides. Variables
/// of `a` and `b` share one namespace; rename apart before calling if needed.
/// Returns `None` when the lists do not unify. Class representatives are the
/// first variable of each class in the order they appear in `a` then `b`.
pub fn mgu(a: &[Term], b: &[Term]) -> Option<BTreeMap<String, Term>> {
    let mut classes = Classes::default();
    if !classes.unify_all(a, b) {
        return None;
    }
    let mut reps = BTreeMap::new();
    let mut order = Vec::new();
    for t in a.iter().chain(b) {
        if let Term::Var(v) = t {
            order.push(v.clone());
        }
    }
    for v in &order {
        let root = classes.find(v);
        reps.entry(root).or_insert_with(|| v.clone());
    }
    let mut out = BTreeMap::new();
    for v in order {
        let t = classes.resolve(&Term::Var(v.clone()), &reps);
        out.insert(v, t);
    }
    Some(out)
}

/// Unifies the head of `rule` with `pattern`, returning the per-variable terms.
fn unify_head(rule: &Rule, pattern: &Atom) -> Option<Vec<Term>> {
    if rule.head.arity() != pattern.arity() {
        return None;
    }
    let renamed: Vec<Term> = pattern
        .args
        .iter()
        .map(|t| match t {
            Term::Var(v) => Term::Var(format!("?{v}")),
            other => other.clone(),
        })
        .collect();
    let mut classes = Classes::default();
    if !classes.unify_all(&rule.head.args, &renamed) {
        return None;
    }
    let vars = rule.vars();
    let mut reps = BTreeMap::new();
    for v in &vars {
        let root = classes.find(v);
        reps.entry(root).or_insert_with(|| v.to_string());
    }
    Some(vars.iter().map(|v| classes.resolve(&Term::var(*v), &reps)).collect())
}

fn instantiate(rule: &Rule, terms: &[Term]) -> Rule {
    let map: BTreeMap<&str, &Term> = rule.vars().into_iter().zip(terms).collect();
    rule.map_terms(&mut |t| match t {
        Term::Var(v) => map[v.as_str()].clone(),
        other => other.clone(),
    })
}

/// Propagates the question's constants top-down through the program.
pub fn unify_program(program: &Program, question: &ProvQuestion) -> Result<Unified> {
    let pattern = &question.pattern;
    if !program.is_idb(&pattern.pred) {
        return Err(Error::NotIdb(pattern.pred.clone()));
    }
    let arity = program.arity(&pattern.pred).unwrap_or(0);
    if arity != pattern.arity() {
        return Err(Error::ArityMismatch { pred: pattern.pred.clone(), expected: arity, found: pattern.arity() });
    }
    let mut copies: IndexMap<(String, Vec<Term>), UnifiedRule> = IndexMap::new();
    let add = |rule: &Rule, terms: Vec<Term>, copies: &mut IndexMap<(String, Vec<Term>), UnifiedRule>| {
        let key = (rule.id.clone(), terms);
        if let Some(i) = copies.get_index_of(&key) {
            return (i, false);
        }
        let copy = UnifiedRule {
            base: rule.id.clone(),
            rule: instantiate(rule, &key.1),
            terms: key.1.clone(),
            annotation: None,
            goal_annotations: vec![None; rule.body.len()],
        };
        let (i, _) = copies.insert_full(key, copy);
        (i, true)
    };
    let mut roots = Vec::new();
    let mut queue = Vec::new();
    for rule in program.rules_for(&pattern.pred) {
        if let Some(terms) = unify_head(rule, pattern) {
            let (i, fresh) = add(rule, terms, &mut copies);
            roots.push(i);
            if fresh {
                queue.push(i);
            }
        }
    }
    let mut links = Vec::new();
    let mut next = 0;
    while next < queue.len() {
        let parent = queue[next];
        next += 1;
        let body = copies[parent].rule.body.clone();
        for (k, lit) in body.iter().enumerate() {
            let Some(atom) = lit.atom() else { continue };
            for rule in program.rules_for(&atom.pred) {
                if let Some(terms) = unify_head(rule, atom) {
                    let (child, fresh) = add(rule, terms, &mut copies);
                    links.push(Link { parent, goal: k, child });
                    if fresh {
                        queue.push(child);
                    }
                }
            }
        }
    }
    Ok(Unified { question: question.clone(), copies: copies.into_values().collect(), roots, links })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    #[test]
    fn constants_flow_into_bodies() {
        let p = parse_program("r1: Q(X,Y) :- T(X,Z), T(Z,Y), not T(X,Y).").unwrap();
        let u = unify_program(&p, &ProvQuestion::parse("WHY Q(n,s)").unwrap()).unwrap();
        assert_eq!(u.copies.len(), 1);
        assert_eq!(u.copies[0].display(&p.rules[0]), "r1^(X=n,Y=s): Q(n,s) :- T(n,Z), T(Z,s), not T(n,s).");
    }

    #[test]
    fn repeated_pattern_variables_merge_rule_variables() {
        let p = parse_program("r1: Q(X,Y) :- R(X,Y).").unwrap();
        let u = unify_program(&p, &ProvQuestion::parse("WHY Q(A,A)").unwrap()).unwrap();
        assert_eq!(u.copies[0].rule.to_string(), "r1: Q(X,X) :- R(X,X).");
        let u = unify_program(&p, &ProvQuestion::parse("WHY Q(X,Y)").unwrap()).unwrap();
        assert_eq!(u.copies[0].rule, p.rules[0]);
    }

    #[test]
    fn conflicting_head_constants_drop_the_rule() {
        let p = parse_program("r1: Q(a,Y) :- R(Y). r2: Q(X,Y) :- S(X,Y).").unwrap();
        let u = unify_program(&p, &ProvQuestion::parse("WHY Q(b,c)").unwrap()).unwrap();
        assert_eq!(u.copies.len(), 1);
        assert_eq!(u.copies[0].base, "r2");
    }

    #[test]
    fn idb_goals_are_unified_with_their_rules() {
        let p = parse_program(
            "r1: Q(X) :- A(X,Y), not B(Y).\n r2: A(X,Y) :- R(X,Y).\n r3: B(Y) :- S(Y,Z).",
        )
        .unwrap();
        let u = unify_program(&p, &ProvQuestion::parse("WHYNOT Q(a)").unwrap()).unwrap();
        let shown: Vec<String> = u.copies.iter().map(|c| c.rule.to_string()).collect();
        assert_eq!(
            shown,
            ["r1: Q(a) :- A(a,Y), not B(Y).", "r2: A(a,Y) :- R(a,Y).", "r3: B(Y) :- S(Y,Z)."]
        );
        assert_eq!(u.links.len(), 2);
        assert_eq!(u.children(0, 1).collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn mgu_links_both_sides() {
        let s = mgu(&[Term::var("X"), Term::var("X")], &[Term::var("A"), Term::constant("c")]).unwrap();
        assert_eq!(s["A"], Term::constant("c"));
        assert!(mgu(&[Term::constant("a")], &[Term::constant("b")]).is_none());
    }
}
