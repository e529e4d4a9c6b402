//! Random non-recursive programs with negation over a small constant pool.

use std::collections::BTreeSet;

use provex::datalog::{validate, Atom, CmpOp, DomainAssignment, Instance, Literal, Program, Rule, Term};
use provex::ProvQuestion;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CONSTS: [&str; 5] = ["a", "b", "c", "d", "e"];
const VARS: [&str; 3] = ["X", "Y", "Z"];
const EDB: [(&str, usize); 2] = [("R", 2), ("S", 1)];

#[derive(Clone, Debug)]
pub struct Case {
    pub program: Program,
    pub instance: Instance,
    pub dom: DomainAssignment,
    pub question: ProvQuestion,
    pub pool: Vec<String>,
}

pub struct Options {
    pub negation: bool,
    pub comparisons: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { negation: true, comparisons: true }
    }
}

fn term(rng: &mut ChaCha8Rng, vars: &[&str], pool: &[String]) -> Term {
    if rng.gen_bool(0.2) {
        Term::constant(pool.choose(rng).unwrap().clone())
    } else {
        Term::var(*vars.choose(rng).unwrap())
    }
}

/// Replaces variables not bound by a positive atom with bound ones.
fn make_safe(rng: &mut ChaCha8Rng, head: &mut Atom, body: &mut [Literal], pool: &[String]) {
    let bound: Vec<String> = body
        .iter()
        .filter_map(|l| match l {
            Literal::Pos(a) => Some(a.vars().into_iter().map(str::to_string).collect::<Vec<_>>()),
            _ => None,
        })
        .flatten()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let fix = |t: &Term, rng: &mut ChaCha8Rng| match t {
        Term::Var(v) if !bound.contains(v) => match bound.choose(rng) {
            Some(b) => Term::var(b.clone()),
            None => Term::constant(pool.choose(rng).unwrap().clone()),
        },
        other => other.clone(),
    };
    head.args = head.args.iter().map(|t| fix(t, rng)).collect();
    for lit in body.iter_mut() {
        if !matches!(lit, Literal::Pos(_)) {
            *lit = lit.map_terms(&mut |t| fix(t, rng));
        }
    }
}

pub fn random_program(rng: &mut ChaCha8Rng, pool: &[String], opts: &Options) -> Program {
    let n = rng.gen_range(1..=3);
    let mut rules: Vec<Rule> = Vec::new();
    let mut idb: Vec<(String, usize)> = Vec::new();
    for i in 0..n {
        let union = i > 0 && rng.gen_bool(0.3);
        let (head_pred, arity) = if union {
            idb.last().unwrap().clone()
        } else {
            (format!("P{}", i + 1), rng.gen_range(0..=2))
        };
        let available: Vec<(String, usize)> = EDB
            .iter()
            .map(|(p, a)| (p.to_string(), *a))
            .chain(idb.iter().filter(|(p, _)| *p != head_pred).cloned())
            .collect();
        let nvars = rng.gen_range(1..=3);
        let vars = &VARS[..nvars];
        let mut body = Vec::new();
        let len = rng.gen_range(1..=3);
        for j in 0..len {
            if j > 0 && opts.comparisons && rng.gen_bool(0.15) {
                let op = *[CmpOp::Ne, CmpOp::Lt, CmpOp::Eq].choose(rng).unwrap();
                body.push(Literal::Cmp(Term::var(*vars.choose(rng).unwrap()), op, term(rng, vars, pool)));
                continue;
            }
            let (pred, a) = available.choose(rng).unwrap().clone();
            let atom = Atom::new(pred, (0..a).map(|_| term(rng, vars, pool)).collect());
            if j > 0 && opts.negation && rng.gen_bool(0.3) {
                body.push(Literal::Neg(atom));
            } else {
                body.push(Literal::Pos(atom));
            }
        }
        let mut head = Atom::new(head_pred.clone(), (0..arity).map(|_| term(rng, vars, pool)).collect());
        make_safe(rng, &mut head, &mut body, pool);
        rules.push(Rule::new(format!("r{}", i + 1), head, body));
        if !union {
            idb.push((head_pred, arity));
        }
    }
    let answer = rules.last().unwrap().head.pred.clone();
    Program { rules, answer }
}

pub fn random_instance(rng: &mut ChaCha8Rng, pool: &[String]) -> Instance {
    let mut instance = Instance::new();
    for (pred, arity) in EDB {
        instance.declare(pred, arity).unwrap();
    }
    for x in pool {
        if rng.gen_bool(0.5) {
            instance.insert("S", &[x]).unwrap();
        }
        for y in pool {
            if rng.gen_bool(0.35) {
                instance.insert("R", &[x, y]).unwrap();
            }
        }
    }
    instance
}

pub fn random_case(seed: u64, opts: &Options) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=CONSTS.len());
    let pool: Vec<String> = CONSTS[..k].iter().map(|s| s.to_string()).collect();
    let program = random_program(&mut rng, &pool, opts);
    validate(&program).expect("generated programs are valid");
    let instance = random_instance(&mut rng, &pool);
    let values: BTreeSet<String> = pool.iter().cloned().collect();
    let mut dom = DomainAssignment::default();
    for (pred, arity) in EDB {
        dom.set_all(pred, arity, &values);
    }
    let preds: Vec<&str> = program.idb_preds().into_iter().collect();
    let pred = *preds.choose(&mut rng).unwrap();
    let arity = program.arity(pred).unwrap();
    let args = (0..arity)
        .map(|i| {
            if rng.gen_bool(0.5) {
                Term::constant(pool.choose(&mut rng).unwrap().clone())
            } else {
                Term::var(if rng.gen_bool(0.3) { "A".to_string() } else { format!("V{i}") })
            }
        })
        .collect();
    let pattern = Atom::new(pred, args);
    let question = if rng.gen_bool(0.5) { ProvQuestion::why(pattern) } else { ProvQuestion::why_not(pattern) };
    Case { program, instance, dom, question, pool }
}
