//! K-interpretations over dual polynomials and direct evaluation of formulas.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::formula::Formula;
use crate::datalog::{DomainAssignment, Instance, Term, Tuple};
use crate::error::{Error, Result};
use crate::semiring::Polynomial;

pub const DOM: &str = "Dom";
pub const BAR: &str = "_bar";

/// Annotation of one literal: 0, 1 or a variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ann {
    Zero,
    One,
    Var(String),
}

impl Ann {
    pub fn parse(s: &str) -> Ann {
        match s.trim() {
            "0" => Ann::Zero,
            "1" => Ann::One,
            v => Ann::Var(v.to_string()),
        }
    }

    pub fn polynomial(&self) -> Polynomial {
        match self {
            Ann::Zero => Polynomial::zero(),
            Ann::One => Polynomial::one(),
            Ann::Var(v) => Polynomial::var(v),
        }
    }
}

impl fmt::Display for Ann {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ann::Zero => f.write_str("0"),
            Ann::One => f.write_str("1"),
            Ann::Var(v) => f.write_str(v),
        }
    }
}

/// Truth of a literal as encoded by its annotation pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Undetermined,
}

/// Annotations of a positive literal and its negation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub pos: Ann,
    pub neg: Ann,
}

impl Row {
    pub const FALSE: Row = Row { pos: Ann::Zero, neg: Ann::One };

    pub fn truth(&self) -> Option<Truth> {
        match (&self.pos, &self.neg) {
            (Ann::One, Ann::Zero) | (Ann::Var(_), Ann::Zero) => Some(Truth::True),
            (Ann::Zero, Ann::One) => Some(Truth::False),
            (Ann::Zero, Ann::Var(n)) if n.ends_with(BAR) && n.len() > BAR.len() => Some(Truth::False),
            (Ann::Var(p), Ann::Var(n)) if *n == format!("{p}{BAR}") => Some(Truth::Undetermined),
            _ => None,
        }
    }
}

/// Maps literals to annotations; literals not listed are false without provenance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KInterpretation {
    arities: BTreeMap<String, usize>,
    rows: BTreeMap<(String, Tuple), Row>,
}

fn literal_name(pred: &str, tuple: &[String]) -> String {
    format!("{pred}({})", tuple.join(","))
}

impl KInterpretation {
    pub fn new() -> KInterpretation {
        KInterpretation::default()
    }

    pub fn declare(&mut self, pred: &str, arity: usize) -> Result<()> {
        match self.arities.insert(pred.to_string(), arity) {
            Some(a) if a != arity => Err(Error::ArityMismatch { pred: pred.into(), expected: a, found: arity }),
            _ => Ok(()),
        }
    }

    /// Sets the annotations of `pred(tuple)` and `!pred(tuple)`.
    pub fn set<S: AsRef<str>>(&mut self, pred: &str, tuple: &[S], pos: Ann, neg: Ann) -> Result<()> {
        let t: Vec<String> = tuple.iter().map(|s| s.as_ref().to_string()).collect();
        let row = Row { pos, neg };
        if row.truth().is_none() {
            return Err(Error::IllegalInterpretation(literal_name(pred, &t)));
        }
        for v in [&row.pos, &row.neg].into_iter().filter_map(|a| match a {
            Ann::Var(v) => Some(v.trim_end_matches(BAR)),
            _ => None,
        }) {
            let clash = self.rows.iter().find(|((p, u), r)| {
                (p != pred || **u != t)
                    && [&r.pos, &r.neg].iter().any(|a| matches!(a, Ann::Var(w) if w.trim_end_matches(BAR) == v))
            });
            if let Some(((p, u), _)) = clash {
                return Err(Error::IllegalInterpretation(format!(
                    "{} reuses the variable of {}",
                    literal_name(pred, &t),
                    literal_name(p, u)
                )));
            }
        }
        self.declare(pred, t.len())?;
        self.rows.insert((pred.to_string(), t), row);
        Ok(())
    }

    pub fn row<S: AsRef<str>>(&self, pred: &str, tuple: &[S]) -> Row {
        let t: Vec<String> = tuple.iter().map(|s| s.as_ref().to_string()).collect();
        self.rows.get(&(pred.to_string(), t)).cloned().unwrap_or(Row::FALSE)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[String], &Row)> {
        self.rows.iter().map(|((p, t), r)| (p.as_str(), t.as_slice(), r))
    }

    pub fn arities(&self) -> &BTreeMap<String, usize> {
        &self.arities
    }

    /// Literals left undetermined.
    pub fn undetermined(&self) -> Vec<(String, Tuple)> {
        self.rows
            .iter()
            .filter(|(_, r)| r.truth() == Some(Truth::Undetermined))
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Parses CSV rows `pred, args..., pos, neg`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<KInterpretation> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut out = KInterpretation::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::syntax(i + 1, 1, "", e.to_string()))?;
            let fields: Vec<&str> = record.iter().collect();
            if fields.iter().all(|f| f.is_empty()) {
                continue;
            }
            if fields.len() < 3 {
                return Err(Error::syntax(i + 1, 1, fields[0], "expected `pred, args..., pos, neg`"));
            }
            let n = fields.len();
            let row_line = record.position().map_or(i + 1, |p| p.line() as usize);
            out.set(fields[0], &fields[1..n - 2], Ann::parse(fields[n - 2]), Ann::parse(fields[n - 1]))
                .map_err(|e| match e {
                    Error::IllegalInterpretation(m) => Error::IllegalInterpretation(format!("{m} (line {row_line})")),
                    other => other,
                })?;
        }
        Ok(out)
    }

    /// Checks that every constant lies in `domain`.
    pub fn check_domain(&self, domain: &BTreeSet<String>) -> Result<()> {
        for ((p, t), _) in &self.rows {
            if let Some(c) = t.iter().find(|c| !domain.contains(*c)) {
                return Err(Error::ConstantOutsideDomain { attribute: p.clone(), value: c.clone() });
            }
        }
        Ok(())
    }
}

/// Parses a constant list separated by commas or whitespace.
pub fn parse_domain(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split([',', ' ', '\t']))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// The instance whose tuples exist, are missing, or are undetermined as `pi` says,
/// plus `Dom` holding the domain.
pub fn instance_of_interpretation(pi: &KInterpretation, domain: &BTreeSet<String>) -> Result<Instance> {
    pi.check_domain(domain)?;
    let mut instance = Instance::new();
    for (pred, arity) in pi.arities() {
        instance.declare(pred, *arity)?;
    }
    for (pred, tuple, row) in pi.rows() {
        match row.truth() {
            Some(Truth::True) => instance.insert(pred, tuple)?,
            Some(Truth::Undetermined) => instance.insert_undetermined(pred, tuple)?,
            Some(Truth::False) => {}
            None => return Err(Error::IllegalInterpretation(literal_name(pred, tuple))),
        }
        match (&row.pos, &row.neg) {
            (Ann::Var(v), _) | (Ann::Zero, Ann::Var(v)) => instance.annotate(pred, tuple, v)?,
            _ => {}
        }
    }
    instance.declare(DOM, 1)?;
    for a in domain {
        instance.insert(DOM, &[a])?;
    }
    Ok(instance)
}

/// Every attribute of every relation ranges over `domain`.
pub fn uniform_domains(instance: &Instance, domain: &BTreeSet<String>) -> DomainAssignment {
    let mut dom = DomainAssignment::default();
    for (pred, rel) in &instance.relations {
        dom.set_all(pred, rel.arity(), domain);
    }
    dom
}

/// Applies `x * x_bar = 0`.
pub fn dual_reduce(p: &Polynomial) -> Polynomial {
    let mut out = p.clone();
    out.retain(|m| {
        !m.iter().any(|(v, _)| {
            v.strip_suffix(BAR)
                .is_some_and(|base| m.iter().any(|(w, _)| w == base))
        })
    });
    out
}

/// Direct recursive evaluation of `formula` under `pi` for valuation `nu`.
pub fn kinter_eval(
    formula: &Formula,
    pi: &KInterpretation,
    domain: &BTreeSet<String>,
    nu: &BTreeMap<String, String>,
) -> Polynomial {
    let value = |t: &Term| -> String {
        match t {
            Term::Var(v) => nu.get(v).cloned().unwrap_or_else(|| v.clone()),
            Term::Const(c) => c.clone(),
            Term::Func(..) => String::new(),
        }
    };
    let p = match formula {
        Formula::Atom(a) => pi.row(&a.pred, &a.args.iter().map(value).collect::<Vec<_>>()).pos.polynomial(),
        Formula::NegAtom(a) => pi.row(&a.pred, &a.args.iter().map(value).collect::<Vec<_>>()).neg.polynomial(),
        Formula::Cmp(l, op, r) => {
            if op.holds(&value(l), &value(r)) {
                Polynomial::one()
            } else {
                Polynomial::zero()
            }
        }
        Formula::And(l, r) => &kinter_eval(l, pi, domain, nu) * &kinter_eval(r, pi, domain, nu),
        Formula::Or(l, r) => &kinter_eval(l, pi, domain, nu) + &kinter_eval(r, pi, domain, nu),
        Formula::Exists(x, b) | Formula::Forall(x, b) => {
            let existential = matches!(formula, Formula::Exists(..));
            let mut acc = if existential { Polynomial::zero() } else { Polynomial::one() };
            for a in domain {
                let mut inner = nu.clone();
                inner.insert(x.clone(), a.clone());
                let v = kinter_eval(b, pi, domain, &inner);
                acc = if existential { &acc + &v } else { dual_reduce(&(&acc * &v)) };
            }
            acc
        }
        Formula::Not(_) => kinter_eval(&formula.nnf(), pi, domain, nu),
    };
    dual_reduce(&p)
}
