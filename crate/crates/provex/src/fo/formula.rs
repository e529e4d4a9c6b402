//! First-order formulas: syntax, negation normal form and renaming apart.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::datalog::parser::{is_var_name, Parser, Tok};
use crate::datalog::{fmt_const, Atom, CmpOp, Term};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    NegAtom(Atom),
    Cmp(Term, CmpOp, Term),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    Not(Box<Formula>),
}

fn term_vars(t: &Term, out: &mut BTreeSet<String>) {
    if let Term::Var(v) = t {
        out.insert(v.clone());
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    match t {
        Term::Var(v) => f.write_str(v),
        Term::Const(c) => fmt_const(f, c),
        Term::Func(..) => f.write_str("?"),
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, a: &Atom) -> fmt::Result {
    write!(f, "{}(", a.pred)?;
    for (i, t) in a.args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write_term(f, t)?;
    }
    f.write_str(")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write_atom(f, a),
            Formula::NegAtom(a) => {
                f.write_str("!")?;
                write_atom(f, a)
            }
            Formula::Cmp(l, op, r) => {
                write_term(f, l)?;
                write!(f, " {op} ")?;
                write_term(f, r)
            }
            Formula::And(l, r) => write!(f, "({l} & {r})"),
            Formula::Or(l, r) => write!(f, "({l} | {r})"),
            Formula::Exists(x, b) => write!(f, "(exists {x}. {b})"),
            Formula::Forall(x, b) => write!(f, "(forall {x}. {b})"),
            Formula::Not(b) => write!(f, "!{b}"),
        }
    }
}

impl Formula {
    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn exists(x: &str, b: Formula) -> Formula {
        Formula::Exists(x.to_string(), Box::new(b))
    }

    pub fn forall(x: &str, b: Formula) -> Formula {
        Formula::Forall(x.to_string(), Box::new(b))
    }

    pub fn not(b: Formula) -> Formula {
        Formula::Not(Box::new(b))
    }

    /// Parses e.g. `forall x. exists y. R(x,y)` with `&`, `|`, `!` and infix
    /// comparisons. Quantified names are variables; other identifiers are
    /// variables when capitalised and constants otherwise.
    pub fn parse(text: &str) -> Result<Formula> {
        let mut p = FormulaParser { p: Parser::new(text)?, bound: Vec::new() };
        let f = p.formula()?;
        if !p.p.at_eof() {
            return Err(p.p.error("unexpected input after the formula"));
        }
        Ok(f)
    }

    /// Free variables in lexicographic order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out.into_iter().collect()
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(a) | Formula::NegAtom(a) => a.args.iter().for_each(|t| term_vars(t, out)),
            Formula::Cmp(l, _, r) => {
                term_vars(l, out);
                term_vars(r, out);
            }
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_free(out);
                r.collect_free(out);
            }
            Formula::Exists(x, b) | Formula::Forall(x, b) => {
                let mut inner = BTreeSet::new();
                b.collect_free(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
            Formula::Not(b) => b.collect_free(out),
        }
    }

    /// Every variable name, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Formula::Exists(x, _) | Formula::Forall(x, _) => {
                out.insert(x.clone());
            }
            other => other.collect_free(&mut out),
        });
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            let terms: Vec<&Term> = match f {
                Formula::Atom(a) | Formula::NegAtom(a) => a.args.iter().collect(),
                Formula::Cmp(l, _, r) => vec![l, r],
                _ => vec![],
            };
            out.extend(terms.into_iter().filter_map(Term::as_const).map(str::to_string));
        });
        out
    }

    /// Predicates with their arities.
    pub fn predicates(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.walk(&mut |f| {
            if let Formula::Atom(a) | Formula::NegAtom(a) = f {
                out.insert(a.pred.clone(), a.arity());
            }
        });
        out
    }

    fn walk(&self, visit: &mut impl FnMut(&Formula)) {
        visit(self);
        match self {
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.walk(visit);
                r.walk(visit);
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) | Formula::Not(b) => b.walk(visit),
            _ => {}
        }
    }

    /// Pushes negation down to literals.
    pub fn nnf(&self) -> Formula {
        self.nnf_signed(false)
    }

    fn nnf_signed(&self, negate: bool) -> Formula {
        match (self, negate) {
            (Formula::Atom(a), false) | (Formula::NegAtom(a), true) => Formula::Atom(a.clone()),
            (Formula::Atom(a), true) | (Formula::NegAtom(a), false) => Formula::NegAtom(a.clone()),
            (Formula::Cmp(l, op, r), n) => Formula::Cmp(l.clone(), if n { op.negate() } else { *op }, r.clone()),
            (Formula::And(l, r), false) | (Formula::Or(l, r), true) => {
                Formula::and(l.nnf_signed(negate), r.nnf_signed(negate))
            }
            (Formula::Or(l, r), false) | (Formula::And(l, r), true) => {
                Formula::or(l.nnf_signed(negate), r.nnf_signed(negate))
            }
            (Formula::Exists(x, b), false) | (Formula::Forall(x, b), true) => Formula::exists(x, b.nnf_signed(negate)),
            (Formula::Forall(x, b), false) | (Formula::Exists(x, b), true) => Formula::forall(x, b.nnf_signed(negate)),
            (Formula::Not(b), n) => b.nnf_signed(!n),
        }
    }

    /// Renames bound variables so that no name is bound twice and bound names
    /// differ from free ones. Names are compared case-insensitively.
    pub fn rename_apart(&self) -> Formula {
        let mut used: BTreeSet<String> = self.free_vars().iter().map(|v| v.to_lowercase()).collect();
        used.extend(self.constants().iter().map(|c| c.to_lowercase()));
        let mut taken: BTreeSet<String> = self.all_vars().iter().map(|v| v.to_lowercase()).collect();
        taken.extend(used.iter().cloned());
        self.rename(&mut used, &mut taken, &BTreeMap::new())
    }

    fn rename(&self, used: &mut BTreeSet<String>, taken: &mut BTreeSet<String>, env: &BTreeMap<String, String>) -> Formula {
        let sub = |t: &Term| match t {
            Term::Var(v) => Term::Var(env.get(v).cloned().unwrap_or_else(|| v.clone())),
            other => other.clone(),
        };
        let sub_atom = |a: &Atom| Atom::new(a.pred.clone(), a.args.iter().map(sub).collect());
        match self {
            Formula::Atom(a) => Formula::Atom(sub_atom(a)),
            Formula::NegAtom(a) => Formula::NegAtom(sub_atom(a)),
            Formula::Cmp(l, op, r) => Formula::Cmp(sub(l), *op, sub(r)),
            Formula::And(l, r) => Formula::and(l.rename(used, taken, env), r.rename(used, taken, env)),
            Formula::Or(l, r) => Formula::or(l.rename(used, taken, env), r.rename(used, taken, env)),
            Formula::Not(b) => Formula::not(b.rename(used, taken, env)),
            Formula::Exists(x, b) | Formula::Forall(x, b) => {
                let name = if used.contains(&x.to_lowercase()) { fresh(taken) } else { x.clone() };
                used.insert(name.to_lowercase());
                taken.insert(name.to_lowercase());
                let mut env = env.clone();
                env.insert(x.clone(), name.clone());
                let body = b.rename(used, taken, &env);
                match self {
                    Formula::Exists(..) => Formula::exists(&name, body),
                    _ => Formula::forall(&name, body),
                }
            }
        }
    }

    /// Applies a valuation to free variables.
    pub fn ground(&self, nu: &BTreeMap<String, String>) -> Formula {
        let sub = |t: &Term| match t {
            Term::Var(v) => nu.get(v).map(|c| Term::Const(c.clone())).unwrap_or_else(|| t.clone()),
            other => other.clone(),
        };
        let sub_atom = |a: &Atom| Atom::new(a.pred.clone(), a.args.iter().map(sub).collect());
        match self {
            Formula::Atom(a) => Formula::Atom(sub_atom(a)),
            Formula::NegAtom(a) => Formula::NegAtom(sub_atom(a)),
            Formula::Cmp(l, op, r) => Formula::Cmp(sub(l), *op, sub(r)),
            Formula::And(l, r) => Formula::and(l.ground(nu), r.ground(nu)),
            Formula::Or(l, r) => Formula::or(l.ground(nu), r.ground(nu)),
            Formula::Not(b) => Formula::not(b.ground(nu)),
            Formula::Exists(x, b) | Formula::Forall(x, b) => {
                let mut inner = nu.clone();
                inner.remove(x);
                let body = b.ground(&inner);
                match self {
                    Formula::Exists(..) => Formula::exists(x, body),
                    _ => Formula::forall(x, body),
                }
            }
        }
    }
}

fn fresh(taken: &BTreeSet<String>) -> String {
    const POOL: [&str; 10] = ["z", "w", "v", "u", "t", "s", "r", "q", "p", "o"];
    POOL.iter()
        .map(|s| s.to_string())
        .chain((1..).map(|i| format!("x{i}")))
        .find(|c| !taken.contains(c))
        .expect("an unused name exists")
}

struct FormulaParser {
    p: Parser,
    bound: Vec<String>,
}

impl FormulaParser {
    fn formula(&mut self) -> Result<Formula> {
        let mut left = self.conjunction()?;
        while *self.p.peek() == Tok::Pipe {
            self.p.next();
            left = Formula::or(left, self.conjunction()?);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut left = self.unary()?;
        while *self.p.peek() == Tok::Amp {
            self.p.next();
            left = Formula::and(left, self.unary()?);
        }
        Ok(left)
    }

    fn quantifier(&self) -> Option<bool> {
        match self.p.peek() {
            Tok::Ident(s) if matches!(self.p.peek_at(1), Tok::Ident(_)) => match s.as_str() {
                "exists" => Some(true),
                "forall" => Some(false),
                _ => None,
            },
            _ => None,
        }
    }

    fn unary(&mut self) -> Result<Formula> {
        if let Some(existential) = self.quantifier() {
            self.p.next();
            let mut names = vec![self.p.ident("a variable")?];
            while *self.p.peek() == Tok::Comma {
                self.p.next();
                names.push(self.p.ident("a variable")?);
            }
            self.p.expect(Tok::Dot, "`.` after the quantified variables")?;
            let depth = self.bound.len();
            self.bound.extend(names.iter().cloned());
            let mut body = self.formula()?;
            self.bound.truncate(depth);
            for x in names.iter().rev() {
                body = if existential { Formula::exists(x, body) } else { Formula::forall(x, body) };
            }
            return Ok(body);
        }
        match self.p.peek().clone() {
            Tok::Bang => {
                self.p.next();
                Ok(match self.unary()? {
                    Formula::Atom(a) => Formula::NegAtom(a),
                    other => Formula::not(other),
                })
            }
            Tok::LParen => {
                self.p.next();
                let f = self.formula()?;
                self.p.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident(name) if *self.p.peek_at(1) == Tok::LParen => {
                self.p.next();
                self.p.next();
                let mut args = Vec::new();
                if *self.p.peek() == Tok::RParen {
                    self.p.next();
                } else {
                    loop {
                        args.push(self.term()?);
                        match self.p.next() {
                            Tok::Comma => {}
                            Tok::RParen => break,
                            _ => return Err(self.p.error("expected `,` or `)`")),
                        }
                    }
                }
                Ok(Formula::Atom(Atom::new(name, args)))
            }
            _ => {
                let left = self.term()?;
                let op = match self.p.next() {
                    Tok::Op(op) => op,
                    _ => return Err(self.p.error("expected a comparison operator")),
                };
                let right = self.term()?;
                Ok(Formula::Cmp(left, op, right))
            }
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.p.peek().clone() {
            Tok::Ident(s) => {
                self.p.next();
                if self.bound.contains(&s) || is_var_name(&s) {
                    Ok(Term::Var(s))
                } else {
                    Ok(Term::Const(s))
                }
            }
            Tok::Str(s) | Tok::Num(s) => {
                self.p.next();
                Ok(Term::Const(s))
            }
            _ => Err(self.p.error("expected a term")),
        }
    }
}
