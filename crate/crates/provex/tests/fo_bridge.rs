mod common;

use std::collections::{BTreeMap, BTreeSet};

use provex::datalog::{evaluate, evaluate3, parse_atom, Atom, CmpOp, Status, Term};
use provex::fo::{
    explain_formula, extract_dual, instance_of_interpretation, kinter_eval, parse_domain, translate, Ann, Formula,
    KInterpretation, Truth,
};
use provex::graph::{resolve_undetermined, NodeLabel};
use provex::semiring::Polynomial;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Fixture {
    formula: Formula,
    pi: KInterpretation,
    domain: BTreeSet<String>,
}

fn fixture(name: &str) -> Fixture {
    let dir = common::fixtures_dir().join(name);
    let read = |f: &str| std::fs::read_to_string(dir.join(f)).unwrap();
    Fixture {
        formula: Formula::parse(&read("formula.fo")).unwrap(),
        pi: KInterpretation::parse(&read("pi.csv")).unwrap(),
        domain: parse_domain(&read("domain.txt")),
    }
}

fn no_valuation() -> BTreeMap<String, String> {
    BTreeMap::new()
}

#[test]
fn universal_sentence_fixture() {
    let f = fixture("fo_fig9");
    let t = translate(&f.formula).unwrap();
    let rules: Vec<String> = t.program.rules.iter().map(ToString::to_string).collect();
    assert_eq!(rules, common::golden("fo_fig9", "translation.dl"));
    let d = explain_formula(&f.formula, &f.pi, &f.domain, &no_valuation()).unwrap();
    assert_eq!(d.polynomial.to_string(), "x*y");
    assert_eq!(d.graph.status(&NodeLabel::tuple("Q_phi", &[] as &[&str])), Some(Status::U));
    assert_eq!(kinter_eval(&f.formula, &f.pi, &f.domain, &no_valuation()), d.polynomial);
}

#[test]
fn undetermined_train_connection() {
    let f = fixture("fo_ex71");
    let d = explain_formula(&f.formula, &f.pi, &f.domain, &no_valuation()).unwrap();
    assert_eq!(d.polynomial, Polynomial::parse("t*s*v_bar + u*r*v_bar").unwrap());
    assert_eq!(d.polynomial, kinter_eval(&f.formula, &f.pi, &f.domain, &no_valuation()));
    let refuted = d.polynomial.substitute(&BTreeMap::from([("v_bar", 0)]));
    assert!(refuted.is_zero());
}

/// Choosing an undetermined fact and re-extracting agrees with substituting
/// into the dual polynomial.
#[test]
fn resolving_agrees_with_substitution() {
    let f = fixture("fo_ex71");
    let d = explain_formula(&f.formula, &f.pi, &f.domain, &no_valuation()).unwrap();
    let label = NodeLabel::tuple("T", &["n", "s"]);
    for (choice, pos, neg, zero) in [
        (Status::T, Ann::Var("v".into()), Ann::Zero, "v_bar"),
        (Status::F, Ann::Zero, Ann::Var("v_bar".into()), "v"),
    ] {
        let g = resolve_undetermined(&d.graph, &BTreeMap::from([(label.clone(), choice)])).unwrap();
        let mut pi = f.pi.clone();
        pi.set("T", &["n", "s"], pos, neg).unwrap();
        let p = extract_dual(&g, &d.root, &pi, &d.translation).unwrap();
        assert_eq!(p, d.polynomial.substitute(&BTreeMap::from([(zero, 0)])), "{choice}");
    }
}

const PREDS: [(&str, usize); 2] = [("R", 2), ("S", 1)];
const NAMES: [&str; 3] = ["x", "y", "z"];

fn random_term(rng: &mut ChaCha8Rng, scope: &[String], domain: &[String]) -> Term {
    if !scope.is_empty() && rng.gen_bool(0.8) {
        Term::var(scope.choose(rng).unwrap().clone())
    } else {
        Term::constant(domain.choose(rng).unwrap().clone())
    }
}

fn random_formula(rng: &mut ChaCha8Rng, depth: usize, scope: &mut Vec<String>, domain: &[String]) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..5) {
            0 | 1 | 2 => {
                let (p, a) = *PREDS.choose(rng).unwrap();
                let atom = Atom::new(p, (0..a).map(|_| random_term(rng, scope, domain)).collect());
                if rng.gen_bool(0.4) {
                    Formula::NegAtom(atom)
                } else {
                    Formula::Atom(atom)
                }
            }
            _ => {
                let op = if rng.gen_bool(0.5) { CmpOp::Eq } else { CmpOp::Ne };
                Formula::Cmp(random_term(rng, scope, domain), op, random_term(rng, scope, domain))
            }
        };
    }
    match rng.gen_range(0..6) {
        0 => Formula::and(random_formula(rng, depth - 1, scope, domain), random_formula(rng, depth - 1, scope, domain)),
        1 => Formula::or(random_formula(rng, depth - 1, scope, domain), random_formula(rng, depth - 1, scope, domain)),
        2 => Formula::not(random_formula(rng, depth - 1, scope, domain)),
        k => {
            // Names may repeat, which exercises renaming apart.
            let x = NAMES.choose(rng).unwrap().to_string();
            scope.push(x.clone());
            let body = random_formula(rng, depth - 1, scope, domain);
            scope.pop();
            if k == 3 {
                Formula::forall(&x, body)
            } else {
                Formula::exists(&x, body)
            }
        }
    }
}

fn random_interpretation(rng: &mut ChaCha8Rng, domain: &[String]) -> KInterpretation {
    let mut pi = KInterpretation::new();
    let mut undetermined = 0;
    for (p, a) in PREDS {
        pi.declare(p, a).unwrap();
        let tuples: Vec<Vec<String>> = if a == 1 {
            domain.iter().map(|c| vec![c.clone()]).collect()
        } else {
            domain.iter().flat_map(|c| domain.iter().map(move |d| vec![c.clone(), d.clone()])).collect()
        };
        for t in tuples {
            let name = format!("{}{}", p.to_lowercase(), t.join(""));
            let (pos, neg) = match rng.gen_range(0..9) {
                0 | 1 => (Ann::One, Ann::Zero),
                2 | 3 => (Ann::Zero, Ann::One),
                4 | 5 => (Ann::Var(name.clone()), Ann::Zero),
                6 | 7 => (Ann::Zero, Ann::Var(format!("{name}_bar"))),
                _ if undetermined < 2 => {
                    undetermined += 1;
                    (Ann::Var(name.clone()), Ann::Var(format!("{name}_bar")))
                }
                _ => (Ann::One, Ann::Zero),
            };
            pi.set(p, &t, pos, neg).unwrap();
        }
    }
    pi
}

/// Two-valued truth of a formula in the model of a fully determined interpretation.
fn holds(f: &Formula, pi: &KInterpretation, domain: &[String], nu: &BTreeMap<String, String>) -> bool {
    let val = |t: &Term| match t {
        Term::Var(v) => nu[v].clone(),
        other => other.as_const().unwrap().to_string(),
    };
    let fact = |a: &Atom| pi.row(&a.pred, &a.args.iter().map(val).collect::<Vec<_>>()).truth() == Some(Truth::True);
    match f {
        Formula::Atom(a) => fact(a),
        Formula::NegAtom(a) => !fact(a),
        Formula::Cmp(l, op, r) => op.holds(&val(l), &val(r)),
        Formula::And(l, r) => holds(l, pi, domain, nu) && holds(r, pi, domain, nu),
        Formula::Or(l, r) => holds(l, pi, domain, nu) || holds(r, pi, domain, nu),
        Formula::Not(b) => !holds(b, pi, domain, nu),
        Formula::Exists(x, b) | Formula::Forall(x, b) => {
            let mut each = domain.iter().map(|a| {
                let mut inner = nu.clone();
                inner.insert(x.clone(), a.clone());
                holds(b, pi, domain, &inner)
            });
            if matches!(f, Formula::Exists(..)) {
                each.any(|b| b)
            } else {
                each.all(|b| b)
            }
        }
    }
}

fn random_domain(rng: &mut ChaCha8Rng) -> Vec<String> {
    let k = rng.gen_range(1..=3);
    ["a", "b", "c"][..k].iter().map(|s| s.to_string()).collect()
}

#[test]
fn extraction_matches_direct_evaluation_on_random_sentences() {
    let mut nonzero = 0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let domain = random_domain(&mut rng);
        let depth = rng.gen_range(1..=4);
        let formula = random_formula(&mut rng, depth, &mut Vec::new(), &domain);
        let pi = random_interpretation(&mut rng, &domain);
        let set: BTreeSet<String> = domain.iter().cloned().collect();
        let d = explain_formula(&formula, &pi, &set, &no_valuation()).unwrap();
        let direct = kinter_eval(&formula, &pi, &set, &no_valuation());
        assert_eq!(d.polynomial, direct, "seed {seed}: {formula}");
        nonzero += usize::from(!direct.is_zero());
    }
    assert!(nonzero > 40, "only {nonzero} nonzero annotations");
}

#[test]
fn extraction_matches_for_free_variables() {
    for seed in 0..60 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let domain = random_domain(&mut rng);
        let mut scope = vec!["f".to_string()];
        let formula = random_formula(&mut rng, 3, &mut scope, &domain);
        let pi = random_interpretation(&mut rng, &domain);
        let set: BTreeSet<String> = domain.iter().cloned().collect();
        let free = formula.free_vars();
        for a in &domain {
            let nu: BTreeMap<String, String> = free.iter().map(|v| (v.clone(), a.clone())).collect();
            let d = explain_formula(&formula, &pi, &set, &nu).unwrap();
            assert_eq!(d.polynomial, kinter_eval(&formula, &pi, &set, &nu), "seed {seed}: {formula}");
        }
    }
}

#[test]
fn translation_agrees_with_model_checking() {
    let mut checked = 0;
    let mut true_count = 0;
    for seed in 0..300 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        let domain = random_domain(&mut rng);
        let depth = rng.gen_range(1..=4);
        let formula = random_formula(&mut rng, depth, &mut Vec::new(), &domain);
        let pi = random_interpretation(&mut rng, &domain);
        if !pi.undetermined().is_empty() {
            continue;
        }
        let set: BTreeSet<String> = domain.iter().cloned().collect();
        let t = translate(&formula).unwrap();
        let mut instance = instance_of_interpretation(&pi, &set).unwrap();
        for (p, a) in PREDS {
            instance.declare(p, a).unwrap();
        }
        let model = evaluate(&t.program, &instance).unwrap();
        let derived = model.tuples("Q_phi").next().is_some();
        let expected = holds(&formula, &pi, &domain, &no_valuation());
        assert_eq!(derived, expected, "seed {seed}: {formula}");
        let three = evaluate3(&t.program, &instance).unwrap();
        let status = three.status("Q_phi", &[] as &[&str]);
        assert_eq!(status == Status::T, expected);
        checked += 1;
        true_count += usize::from(expected);
    }
    assert!(checked > 100 && true_count > 20 && true_count < checked - 20, "{checked} {true_count}");
}

#[test]
fn root_must_be_translated() {
    let f = fixture("fo_fig9");
    let d = explain_formula(&f.formula, &f.pi, &f.domain, &no_valuation()).unwrap();
    let bogus = parse_atom("R(a,a)").unwrap();
    assert!(extract_dual(&d.graph, &bogus, &f.pi, &d.translation).is_err());
}
