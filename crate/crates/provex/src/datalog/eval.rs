//! Bottom-up evaluation in topological predicate order over interned values.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexSet;
use rustc_hash::{FxBuildHasher, FxHashMap};

use super::ast::{Atom, CmpOp, Literal, Program, Rule, Term};
use super::check::topological_order;
use super::instance::{Instance, Tuple};
use crate::error::{Error, Result};

/// Interned value handle, valid within one [`Model`].
pub type Sym = u32;

type Row = Box<[Sym]>;
type RowSet = IndexSet<Row, FxBuildHasher>;

#[derive(Clone, Debug)]
enum SymData {
    Atom(Arc<str>),
    Skolem(Sym, Row),
}

/// A resolved value: a constant or a Skolem term built by a head function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueRef<'a> {
    Atom(&'a str),
    Skolem(&'a str, &'a [Sym]),
}

#[derive(Clone, Debug, Default)]
struct Interner {
    data: Vec<SymData>,
    atoms: FxHashMap<Arc<str>, Sym>,
    skolems: FxHashMap<(Sym, Row), Sym>,
}

impl Interner {
    fn atom(&mut self, s: &str) -> Sym {
        if let Some(&id) = self.atoms.get(s) {
            return id;
        }
        let id = self.data.len() as Sym;
        let arc: Arc<str> = Arc::from(s);
        self.data.push(SymData::Atom(arc.clone()));
        self.atoms.insert(arc, id);
        id
    }

    fn lookup(&self, s: &str) -> Option<Sym> {
        self.atoms.get(s).copied()
    }

    fn skolem(&mut self, functor: Sym, args: Row) -> Sym {
        if let Some(&id) = self.skolems.get(&(functor, args.clone())) {
            return id;
        }
        let id = self.data.len() as Sym;
        self.data.push(SymData::Skolem(functor, args.clone()));
        self.skolems.insert((functor, args), id);
        id
    }

    fn resolve(&self, sym: Sym) -> ValueRef<'_> {
        match &self.data[sym as usize] {
            SymData::Atom(s) => ValueRef::Atom(s),
            SymData::Skolem(f, args) => match &self.data[*f as usize] {
                SymData::Atom(name) => ValueRef::Skolem(name, args),
                SymData::Skolem(..) => unreachable!("functors are atoms"),
            },
        }
    }

    fn display(&self, sym: Sym) -> String {
        let mut s = String::new();
        self.write(sym, &mut s).expect("writing to a string");
        s
    }

    fn write(&self, sym: Sym, out: &mut impl fmt::Write) -> fmt::Result {
        match self.resolve(sym) {
            ValueRef::Atom(a) => out.write_str(a),
            ValueRef::Skolem(f, args) => {
                write!(out, "{f}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.write_char(',')?;
                    }
                    self.write(*a, out)?;
                }
                out.write_char(')')
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Rel {
    arity: usize,
    rows: RowSet,
    indexes: FxHashMap<Vec<usize>, FxHashMap<Row, Vec<u32>>>,
}

impl Rel {
    fn new(arity: usize) -> Rel {
        Rel { arity, ..Default::default() }
    }

    fn ensure_index(&mut self, cols: &[usize]) {
        if cols.is_empty() || self.indexes.contains_key(cols) {
            return;
        }
        let mut index: FxHashMap<Row, Vec<u32>> = FxHashMap::default();
        for (i, row) in self.rows.iter().enumerate() {
            let key: Row = cols.iter().map(|&c| row[c]).collect();
            index.entry(key).or_default().push(i as u32);
        }
        self.indexes.insert(cols.to_vec(), index);
    }
}

/// Relations over interned values; the result of evaluating a program.
#[derive(Clone, Debug, Default)]
pub struct Model {
    interner: Interner,
    rels: FxHashMap<String, Rel>,
    names: BTreeSet<String>,
}

/// Where a slot of the binding gets its value.
#[derive(Clone, Debug)]
enum Arg {
    Const(Sym),
    Slot(usize),
}

#[derive(Clone, Debug)]
enum Step {
    Scan {
        pred: String,
        key_cols: Vec<usize>,
        key: Vec<Arg>,
        /// (column, slot) pairs binding fresh variables.
        binds: Vec<(usize, usize)>,
        /// (column, slot) pairs that must equal an earlier column of this atom.
        checks: Vec<(usize, usize)>,
    },
    Absent {
        pred: String,
        args: Vec<Arg>,
    },
    Compare(Arg, CmpOp, Arg),
}

#[derive(Clone, Debug)]
enum HeadArg {
    Arg(Arg),
    Neg(Box<HeadArg>),
    Func(Sym, Vec<HeadArg>),
}

impl Model {
    pub fn new() -> Model {
        Model::default()
    }

    /// Loads the determined tuples of an instance.
    pub fn from_instance(instance: &Instance) -> Model {
        let mut m = Model::new();
        for (pred, rel) in &instance.relations {
            m.declare(pred, rel.arity());
            for t in &rel.tuples {
                m.insert(pred, t);
            }
        }
        m
    }

    pub fn declare(&mut self, pred: &str, arity: usize) {
        self.names.insert(pred.to_string());
        self.rels.entry(pred.to_string()).or_insert_with(|| Rel::new(arity));
    }

    pub fn insert<S: AsRef<str>>(&mut self, pred: &str, tuple: &[S]) {
        self.declare(pred, tuple.len());
        let row: Row = tuple.iter().map(|s| self.interner.atom(s.as_ref())).collect();
        let rel = self.rels.get_mut(pred).expect("declared");
        rel.indexes.clear();
        rel.rows.insert(row);
    }

    pub fn has_relation(&self, pred: &str) -> bool {
        self.rels.contains_key(pred)
    }

    pub fn len(&self, pred: &str) -> usize {
        self.rels.get(pred).map_or(0, |r| r.rows.len())
    }

    pub fn is_empty(&self, pred: &str) -> bool {
        self.len(pred) == 0
    }

    pub fn contains<S: AsRef<str>>(&self, pred: &str, tuple: &[S]) -> bool {
        let Some(rel) = self.rels.get(pred) else {
            return false;
        };
        let row: Option<Row> = tuple.iter().map(|s| self.interner.lookup(s.as_ref())).collect();
        row.is_some_and(|r| rel.rows.contains(&r))
    }

    /// Interned rows of a relation in insertion order.
    pub fn rows(&self, pred: &str) -> impl Iterator<Item = &[Sym]> {
        self.rels.get(pred).into_iter().flat_map(|r| r.rows.iter().map(|r| &r[..]))
    }

    pub fn resolve(&self, sym: Sym) -> ValueRef<'_> {
        self.interner.resolve(sym)
    }

    pub fn display(&self, sym: Sym) -> String {
        self.interner.display(sym)
    }

    /// Tuples of a relation rendered as strings, sorted.
    pub fn tuples(&self, pred: &str) -> BTreeSet<Tuple> {
        self.rows(pred)
            .map(|r| r.iter().map(|&s| self.display(s)).collect())
            .collect()
    }

    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn to_instance(&self) -> Instance {
        let mut out = Instance::new();
        for pred in &self.names {
            let rel = &self.rels[pred];
            out.declare(pred, rel.arity).expect("fresh relation");
            for t in self.tuples(pred) {
                out.insert(pred, &t).expect("arity checked");
            }
        }
        out
    }

    /// Evaluates `program`, adding its IDB relations to this model.
    pub fn run(&mut self, program: &Program) -> Result<()> {
        let idb = program.idb_preds();
        for rule in &program.rules {
            for atom in rule.body.iter().filter_map(Literal::atom) {
                if idb.contains(atom.pred.as_str()) {
                    continue;
                }
                match self.rels.get(&atom.pred) {
                    None => return Err(Error::MissingRelation(atom.pred.clone())),
                    Some(rel) if rel.arity != atom.arity() && !rel.rows.is_empty() => {
                        return Err(Error::ArityMismatch {
                            pred: atom.pred.clone(),
                            expected: atom.arity(),
                            found: rel.arity,
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        for pred in topological_order(program)? {
            let arity = program.arity(&pred).unwrap_or(0);
            let mut fresh: Vec<Row> = Vec::new();
            for rule in program.rules_for(&pred) {
                self.eval_rule(rule, &mut fresh)?;
            }
            self.declare(&pred, arity);
            let rel = self.rels.get_mut(&pred).expect("declared");
            rel.indexes.clear();
            rel.rows.extend(fresh);
        }
        Ok(())
    }

    fn arg(&mut self, t: &Term, slots: &FxHashMap<String, usize>) -> Arg {
        match t {
            Term::Var(v) => Arg::Slot(slots[v]),
            Term::Const(c) => Arg::Const(self.interner.atom(c)),
            Term::Func(..) => unreachable!("function terms are rejected in bodies"),
        }
    }

    fn head_arg(&mut self, t: &Term, slots: &FxHashMap<String, usize>) -> HeadArg {
        match t {
            Term::Func(name, args) if name == "neg" && args.len() == 1 => {
                HeadArg::Neg(Box::new(self.head_arg(&args[0], slots)))
            }
            Term::Func(name, args) => {
                let f = self.interner.atom(name);
                HeadArg::Func(f, args.iter().map(|a| self.head_arg(a, slots)).collect())
            }
            other => HeadArg::Arg(self.arg(other, slots)),
        }
    }

    fn plan(&mut self, rule: &Rule, slots: &FxHashMap<String, usize>) -> Vec<Step> {
        let mut bound: BTreeSet<&str> = BTreeSet::new();
        let mut pending: Vec<&Literal> = rule.body.iter().collect();
        let mut steps = Vec::new();
        while !pending.is_empty() {
            let ready = pending
                .iter()
                .position(|l| !matches!(l, Literal::Pos(_)) && l.vars().iter().all(|v| bound.contains(v)));
            let idx = ready.unwrap_or_else(|| {
                let score = |l: &&Literal| match l {
                    Literal::Pos(a) => a
                        .args
                        .iter()
                        .filter(|t| t.as_var().map_or(true, |v| bound.contains(v)))
                        .count() as i64,
                    _ => i64::MIN,
                };
                let best = pending.iter().map(score).max().unwrap_or(i64::MIN);
                pending.iter().position(|l| score(l) == best).expect("nonempty")
            });
            let lit = pending.remove(idx);
            match lit {
                Literal::Pos(atom) => {
                    let mut key_cols = Vec::new();
                    let mut key = Vec::new();
                    let mut binds = Vec::new();
                    let mut checks = Vec::new();
                    let mut first_col: FxHashMap<&str, usize> = FxHashMap::default();
                    for (col, t) in atom.args.iter().enumerate() {
                        match t {
                            Term::Var(v) if !bound.contains(v.as_str()) => {
                                if let Some(&c) = first_col.get(v.as_str()) {
                                    checks.push((col, c));
                                } else {
                                    first_col.insert(v, col);
                                    binds.push((col, slots[v]));
                                }
                            }
                            _ => {
                                key_cols.push(col);
                                key.push(self.arg(t, slots));
                            }
                        }
                    }
                    for v in atom.vars() {
                        bound.insert(v);
                    }
                    steps.push(Step::Scan { pred: atom.pred.clone(), key_cols, key, binds, checks });
                }
                Literal::Neg(atom) => {
                    let args = atom.args.iter().map(|t| self.arg(t, slots)).collect();
                    steps.push(Step::Absent { pred: atom.pred.clone(), args });
                }
                Literal::Cmp(l, op, r) => {
                    let (l, r) = (self.arg(l, slots), self.arg(r, slots));
                    steps.push(Step::Compare(l, *op, r));
                }
            }
        }
        steps
    }

    fn eval_rule(&mut self, rule: &Rule, out: &mut Vec<Row>) -> Result<()> {
        let slots: FxHashMap<String, usize> = rule
            .vars()
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v.to_string(), i))
            .collect();
        let steps = self.plan(rule, &slots);
        let head: Vec<HeadArg> = rule.head.args.iter().map(|t| self.head_arg(t, &slots)).collect();
        for step in &steps {
            if let Step::Scan { pred, key_cols, .. } = step {
                if let Some(rel) = self.rels.get_mut(pred) {
                    rel.ensure_index(key_cols);
                }
            }
        }
        let mut bindings: Vec<Vec<Sym>> = Vec::new();
        let mut binding = vec![Sym::MAX; slots.len()];
        let ctx = Ctx { rels: &self.rels, interner: &self.interner, steps: &steps };
        ctx.search(0, &mut binding, &mut |b| bindings.push(b.to_vec()));
        let mut scratch = Vec::with_capacity(head.len());
        for b in bindings {
            scratch.clear();
            for h in &head {
                let v = self.build_head(h, &b)?;
                scratch.push(v);
            }
            out.push(scratch.as_slice().into());
        }
        Ok(())
    }

    fn build_head(&mut self, h: &HeadArg, b: &[Sym]) -> Result<Sym> {
        Ok(match h {
            HeadArg::Arg(Arg::Const(c)) => *c,
            HeadArg::Arg(Arg::Slot(s)) => b[*s],
            HeadArg::Neg(inner) => {
                let v = self.build_head(inner, b)?;
                match self.interner.resolve(v) {
                    ValueRef::Atom("true") => self.interner.atom("false"),
                    ValueRef::Atom("false") => self.interner.atom("true"),
                    _ => return Err(Error::Invalid(format!("neg() applied to non-boolean {}", self.display(v)))),
                }
            }
            HeadArg::Func(f, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.build_head(a, b)?);
                }
                self.interner.skolem(*f, vals.into())
            }
        })
    }
}

struct Ctx<'a> {
    rels: &'a FxHashMap<String, Rel>,
    interner: &'a Interner,
    steps: &'a [Step],
}

impl Ctx<'_> {
    fn val(&self, a: &Arg, b: &[Sym]) -> Sym {
        match a {
            Arg::Const(c) => *c,
            Arg::Slot(s) => b[*s],
        }
    }

    fn search(&self, i: usize, b: &mut Vec<Sym>, emit: &mut dyn FnMut(&[Sym])) {
        let Some(step) = self.steps.get(i) else {
            emit(b);
            return;
        };
        match step {
            Step::Scan { pred, key_cols, key, binds, checks } => {
                let Some(rel) = self.rels.get(pred) else {
                    return;
                };
                let mut visit = |row: &[Sym], b: &mut Vec<Sym>| {
                    for &(col, slot) in binds {
                        b[slot] = row[col];
                    }
                    if checks.iter().all(|&(col, c)| row[col] == row[c]) {
                        self.search(i + 1, b, emit);
                    }
                };
                if key_cols.is_empty() {
                    for row in rel.rows.iter() {
                        visit(row, b);
                    }
                } else {
                    let k: Row = key.iter().map(|a| self.val(a, b)).collect();
                    if key_cols.len() == rel.arity {
                        if rel.rows.contains(&k) {
                            visit(&k, b);
                        }
                        return;
                    }
                    let index = &rel.indexes[key_cols];
                    if let Some(ids) = index.get(&k) {
                        for &id in ids {
                            visit(&rel.rows[id as usize], b);
                        }
                    }
                }
            }
            Step::Absent { pred, args } => {
                let row: Row = args.iter().map(|a| self.val(a, b)).collect();
                let present = self.rels.get(pred).is_some_and(|r| r.rows.contains(&row));
                if !present {
                    self.search(i + 1, b, emit);
                }
            }
            Step::Compare(l, op, r) => {
                let (l, r) = (self.val(l, b), self.val(r, b));
                let holds = match (self.interner.resolve(l), self.interner.resolve(r)) {
                    (ValueRef::Atom(x), ValueRef::Atom(y)) => op.holds(x, y),
                    _ => match op {
                        CmpOp::Eq => l == r,
                        CmpOp::Ne => l != r,
                        _ => op.holds(&self.interner.display(l), &self.interner.display(r)),
                    },
                };
                if holds {
                    self.search(i + 1, b, emit);
                }
            }
        }
    }
}

/// Evaluates a program over an instance; the result contains I and all IDB relations.
pub fn evaluate(program: &Program, instance: &Instance) -> Result<Instance> {
    let mut model = Model::from_instance(instance);
    model.run(program)?;
    Ok(model.to_instance())
}

/// Like [`evaluate`] but keeps the interned model.
pub fn evaluate_model(program: &Program, instance: &Instance) -> Result<Model> {
    let mut model = Model::from_instance(instance);
    model.run(program)?;
    Ok(model)
}

/// Ground atom of a tuple, for messages and labels.
pub fn ground_atom(pred: &str, tuple: &[String]) -> Atom {
    Atom::new(pred, tuple.iter().map(|c| Term::Const(c.clone())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    fn train() -> Instance {
        let mut i = Instance::new();
        for (a, b) in [("s", "s"), ("s", "c"), ("c", "s"), ("w", "s"), ("n", "w"), ("n", "c")] {
            i.insert("T", &[a, b]).unwrap();
        }
        i
    }

    fn set(pairs: &[(&str, &str)]) -> BTreeSet<Tuple> {
        pairs.iter().map(|(a, b)| vec![a.to_string(), b.to_string()]).collect()
    }

    #[test]
    fn train_query() {
        let p = parse_program("Q(X,Y) :- T(X,Z), T(Z,Y), not T(X,Y).").unwrap();
        let out = evaluate(&p, &train()).unwrap();
        let q: BTreeSet<Tuple> = out.tuples("Q").cloned().collect();
        assert_eq!(q, set(&[("w", "c"), ("n", "s"), ("c", "c")]));
        assert_eq!(out.tuples("T").count(), 6);
    }

    #[test]
    fn three_hop() {
        let mut i = Instance::new();
        for (a, b) in [("s", "s"), ("s", "c"), ("c", "s")] {
            i.insert("T", &[a, b]).unwrap();
        }
        let p = parse_program("Q(X,Y) :- T(X,A), T(A,B), T(B,Y).").unwrap();
        let out = evaluate_model(&p, &i).unwrap();
        assert!(out.contains("Q", &["s", "s"]));
        assert!(out.contains("Q", &["c", "c"]));
    }

    #[test]
    fn missing_relation() {
        let p = parse_program("Q(X) :- R(X).").unwrap();
        assert_eq!(evaluate(&p, &Instance::new()), Err(Error::MissingRelation("R".into())));
    }

    #[test]
    fn empty_edb_gives_empty_idb() {
        let mut i = Instance::new();
        i.declare("T", 2).unwrap();
        let p = parse_program("Q(X,Y) :- T(X,Z), T(Z,Y), not T(X,Y).").unwrap();
        assert_eq!(evaluate(&p, &i).unwrap().tuples("Q").count(), 0);
    }

    #[test]
    fn comparisons_constants_and_repeated_vars() {
        let mut i = Instance::new();
        for (a, b) in [("1", "2"), ("2", "2"), ("10", "9"), ("a", "b")] {
            i.insert("R", &[a, b]).unwrap();
        }
        let p = parse_program("Q(X) :- R(X,Y), X < Y.\nP(X) :- R(X,X).\nS(Y) :- R(a,Y).\n").unwrap();
        let m = evaluate_model(&p, &i).unwrap();
        assert_eq!(m.tuples("Q").len(), 2);
        assert!(m.contains("Q", &["1"]) && m.contains("Q", &["a"]));
        assert_eq!(m.tuples("P").len(), 1);
        assert!(m.contains("S", &["b"]));
    }

    #[test]
    fn skolem_heads_and_boolean_negation() {
        let (rules, _) = crate::datalog::parse_rules(
            "edge(N(X), M(X,neg(B))) :- R(X,B).",
        )
        .unwrap();
        let p = Program { rules, answer: "edge".into() };
        let mut i = Instance::new();
        i.insert("R", &["a", "true"]).unwrap();
        let m = evaluate_model(&p, &i).unwrap();
        let rows: Vec<_> = m.rows("edge").collect();
        assert_eq!(rows.len(), 1);
        assert_eq!(m.display(rows[0][1]), "M(a,false)");
        assert!(matches!(m.resolve(rows[0][0]), ValueRef::Skolem("N", _)));
    }
}
