mod common;

use std::collections::BTreeMap;

use common::gen::{random_case, Options};
use proptest::prelude::*;
use provex::datalog::{evaluate, parse_atom, Atom, Instance, Literal, Program, Term};
use provex::error::Error;
use provex::rewrite::{explain, ExplainKind};
use provex::semiring::{extract_polynomial, transform_graph, Polynomial, SemiringKind};
use provex::ProvQuestion;

/// Sum over all derivations of `pred(tuple)` of the product of leaf annotations.
fn derivations(program: &Program, instance: &Instance, pool: &[String], pred: &str, tuple: &[String]) -> Polynomial {
    if !program.is_idb(pred) {
        return match instance.annotation(pred, tuple) {
            Some(a) => Polynomial::var(a),
            None => Polynomial::zero(),
        };
    }
    let mut total = Polynomial::zero();
    for rule in program.rules_for(pred) {
        let vars: Vec<&str> = rule.vars();
        let mut idx = vec![0usize; vars.len()];
        loop {
            let env: BTreeMap<&str, &str> = vars.iter().zip(&idx).map(|(v, &i)| (*v, pool[i].as_str())).collect();
            let ground = |t: &Term| match t {
                Term::Var(v) => env[v.as_str()].to_string(),
                other => other.as_const().unwrap().to_string(),
            };
            let head: Vec<String> = rule.head.args.iter().map(ground).collect();
            if head == tuple {
                let mut prod = Polynomial::one();
                for lit in &rule.body {
                    let factor = match lit {
                        Literal::Pos(a) => {
                            let args: Vec<String> = a.args.iter().map(ground).collect();
                            derivations(program, instance, pool, &a.pred, &args)
                        }
                        Literal::Cmp(l, op, r) if op.holds(&ground(l), &ground(r)) => Polynomial::one(),
                        _ => Polynomial::zero(),
                    };
                    prod = &prod * &factor;
                }
                total = &total + &prod;
            }
            let Some(k) = (0..idx.len()).find(|&k| idx[k] + 1 < pool.len()) else { break };
            idx[k] += 1;
            idx[..k].iter_mut().for_each(|i| *i = 0);
        }
    }
    total
}

fn annotate_all(instance: &mut Instance) {
    for pred in ["R", "S"] {
        let tuples: Vec<Vec<String>> = instance.tuples(pred).cloned().map(|t| t.to_vec()).collect();
        for t in tuples {
            let name = format!("{}_{}", pred.to_lowercase(), t.join(""));
            instance.annotate(pred, &t, &name).unwrap();
        }
    }
}

fn why(program: &Program, instance: &Instance, dom: &provex::datalog::DomainAssignment, atom: &Atom) -> provex::graph::ProvGraph {
    explain(program, instance, dom, &ProvQuestion::why(atom.clone()), ExplainKind::Full).unwrap()
}

#[test]
fn three_hop_polynomials() {
    let f = common::load("threehop");
    let root = parse_atom("Q_3hop(s,s)").unwrap();
    let g = why(&f.program, &f.instance, &f.dom, &root);
    let p = extract_polynomial(&g, &root, &f.instance).unwrap();
    assert_eq!(p.to_string(), "p^3 + 2*p*q*r");
    let expected = [
        (SemiringKind::NX, "p^3 + 2*p*q*r"),
        (SemiringKind::BX, "p^3 + p*q*r"),
        (SemiringKind::Trio, "2*p*q*r + p"),
        (SemiringKind::Why, "p*q*r + p"),
        (SemiringKind::PosBool, "p"),
        (SemiringKind::Which, "p + q + r"),
    ];
    for (kind, text) in expected {
        let og = transform_graph(&g, kind, &f.instance).unwrap();
        let r = og.roots[0];
        assert_eq!(og.polynomial(r, kind).to_string(), text, "{}", kind.name());
        assert_eq!(p.normalize(kind).to_string(), text);
    }
}

#[test]
fn graph_sizes_shrink_along_the_hierarchy() {
    let f = common::load("threehop");
    let root = parse_atom("Q_3hop(s,s)").unwrap();
    let g = why(&f.program, &f.instance, &f.dom, &root);
    let size = |k| {
        let og = transform_graph(&g, k, &f.instance).unwrap();
        og.node_count() + og.edge_count()
    };
    assert!(size(SemiringKind::BX) < size(SemiringKind::NX));
    assert!(size(SemiringKind::Why) <= size(SemiringKind::Trio));
    assert!(size(SemiringKind::PosBool) < size(SemiringKind::Why));
    let which = transform_graph(&g, SemiringKind::Which, &f.instance).unwrap();
    assert_eq!(which.edge_count(), 3);
    assert!(which.to_dot().starts_with("digraph"));
}

#[test]
fn errors() {
    let f = common::load("train");
    let root = parse_atom("Q(n,s)").unwrap();
    let g = why(&f.program, &f.instance, &f.dom, &root);
    assert_eq!(extract_polynomial(&g, &root, &f.instance), Err(Error::NegationPresent));

    let f = common::load("threehop");
    let root = parse_atom("Q_3hop(s,s)").unwrap();
    let g = why(&f.program, &f.instance, &f.dom, &root);
    let mut plain = Instance::new();
    for t in f.instance.tuples("T") {
        plain.insert("T", t).unwrap();
    }
    assert!(matches!(extract_polynomial(&g, &root, &plain), Err(Error::MissingAnnotation(_))));

    let q = ProvQuestion::why_not(parse_atom("Q_3hop(c,c)").unwrap());
    let g = explain(&f.program, &f.instance, &f.dom, &q, ExplainKind::Full).unwrap();
    let root = parse_atom("Q_3hop(c,c)").unwrap();
    assert!(matches!(extract_polynomial(&g, &root, &f.instance), Err(Error::Invalid(_))));
}

#[test]
fn random_positive_programs_match_derivation_count() {
    let opts = Options { negation: false, comparisons: true };
    let mut checked = 0;
    for seed in 0..150 {
        let mut case = random_case(seed, &opts);
        annotate_all(&mut case.instance);
        let model = evaluate(&case.program, &case.instance).unwrap();
        let answer = case.program.answer.clone();
        for tuple in model.tuples(&answer).take(3) {
            let tuple: Vec<String> = tuple.to_vec();
            let root = Atom::new(answer.clone(), tuple.iter().map(Term::constant).collect());
            let g = why(&case.program, &case.instance, &case.dom, &root);
            let oracle = derivations(&case.program, &case.instance, &case.pool, &answer, &tuple);
            let got = extract_polynomial(&g, &root, &case.instance).unwrap();
            assert_eq!(got, oracle, "seed {seed} root {root}");
            for kind in SemiringKind::ALL {
                let og = transform_graph(&g, kind, &case.instance).unwrap();
                let r = og.roots.iter().copied().find(|&r| og.nodes[r].label.as_ref().is_some_and(|l| l.short() == root.to_string()));
                let r = r.expect("root present");
                assert_eq!(og.polynomial(r, kind), oracle.normalize(kind), "seed {seed} {}", kind.name());
            }
            checked += 1;
        }
    }
    assert!(checked > 100, "only {checked} tuples checked");
}

fn poly_strategy() -> impl Strategy<Value = Polynomial> {
    let mono = prop::collection::vec((prop::sample::select(vec!["x", "y", "z", "w"]), 1u32..3), 0..3);
    prop::collection::vec((mono, 1u64..4), 0..4).prop_map(|terms| {
        Polynomial::from_terms(terms.into_iter().map(|(m, c)| (m.into_iter().map(|(v, e)| (v.to_string(), e)).collect(), c)))
    })
}

proptest! {
    #[test]
    fn semiring_laws(a in poly_strategy(), b in poly_strategy(), c in poly_strategy()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &Polynomial::zero(), Polynomial::zero());
        prop_assert_eq!(&a * &Polynomial::one(), a.clone());
    }

    #[test]
    fn normalization_is_a_homomorphism(a in poly_strategy(), b in poly_strategy()) {
        for kind in SemiringKind::ALL {
            let n = |p: &Polynomial| p.normalize(kind);
            prop_assert_eq!(n(&(&a + &b)), n(&(&n(&a) + &n(&b))));
            prop_assert_eq!(n(&(&a * &b)), n(&(&n(&a) * &n(&b))));
            prop_assert_eq!(n(&n(&a)), n(&a));
        }
    }

    #[test]
    fn display_round_trips(a in poly_strategy()) {
        prop_assert_eq!(Polynomial::parse(&a.to_string()).unwrap(), a);
    }
}
