//! Browser bindings: explain a question, extract a dual polynomial, and
//! rewrite a query along a d-tree.

use std::collections::BTreeMap;

use provex::datalog::io::{parse_domain_groups, read_relation};
use provex::datalog::{default_domains, parse_program, Instance};
use provex::factorize::{rewrite_for_dtree, DTree};
use provex::fo::{explain_formula, parse_domain, Formula, KInterpretation};
use provex::rewrite::{explain, ExplainKind};
use provex::semiring::{transform_graph, SemiringKind};
use provex::ProvQuestion;
use wasm_bindgen::prelude::*;

/// Reads relation blocks: a `[Name]` line followed by that relation's CSV rows.
pub fn parse_relations(text: &str) -> Result<Instance, String> {
    let mut instance = Instance::new();
    let mut current: Option<(String, String)> = None;
    let flush = |block: Option<(String, String)>, instance: &mut Instance| -> Result<(), String> {
        match block {
            Some((name, rows)) => read_relation(instance, &name, &rows).map_err(|e| format!("{name}: {e}")),
            None => Ok(()),
        }
    };
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            flush(current.take(), &mut instance)?;
            current = Some((name.trim().to_string(), String::new()));
        } else if let Some((_, rows)) = current.as_mut() {
            rows.push_str(line);
            rows.push('\n');
        } else if !trimmed.is_empty() {
            return Err("relation rows must follow a `[Name]` header".into());
        }
    }
    flush(current, &mut instance)?;
    Ok(instance)
}

/// Explains `question`; `kind` is `full`, `which` or a semiring name, and
/// `format` is `dot`, `edgelist` or `poly`.
pub fn explain_text(program: &str, relations: &str, domains: &str, question: &str, kind: &str, format: &str) -> Result<String, String> {
    let program = parse_program(program).map_err(|e| format!("program: {e}"))?;
    let instance = parse_relations(relations)?;
    let groups = parse_domain_groups(&instance, domains).map_err(|e| format!("domains: {e}"))?;
    let dom = default_domains(&instance, &groups);
    let question = ProvQuestion::parse(question).map_err(|e| format!("question: {e}"))?;
    let semiring = SemiringKind::parse(kind);
    let explain_kind = if kind == "which" && format != "poly" { ExplainKind::Which } else { ExplainKind::Full };
    let graph = explain(&program, &instance, &dom, &question, explain_kind).map_err(|e| e.to_string())?;
    match (format, semiring) {
        ("poly", Some(s)) => {
            let ops = transform_graph(&graph, s, &instance).map_err(|e| e.to_string())?;
            let mut lines: Vec<String> = ops
                .roots
                .iter()
                .map(|&r| {
                    let name = ops.nodes[r].label.as_ref().map(|l| l.short()).unwrap_or_default();
                    format!("{name}: {}", ops.polynomial(r, s))
                })
                .collect();
            lines.sort();
            Ok(lines.join("\n") + "\n")
        }
        ("poly", None) => Err(format!("`{kind}` is not a semiring")),
        ("dot", _) => Ok(graph.to_dot()),
        ("edgelist", _) => Ok(graph.to_edge_list()),
        _ => Err(format!("unknown format `{format}`")),
    }
}

/// Dual polynomial of a sentence over a K-interpretation.
pub fn dual_text(formula: &str, pi: &str, domain: &str) -> Result<String, String> {
    let formula = Formula::parse(formula).map_err(|e| format!("formula: {e}"))?;
    let pi = KInterpretation::parse(pi).map_err(|e| format!("interpretation: {e}"))?;
    let d = explain_formula(&formula, &pi, &parse_domain(domain), &BTreeMap::new()).map_err(|e| e.to_string())?;
    Ok(format!("{}\n\n{}", d.polynomial, d.translation.program))
}

/// The program obtained by rewriting a single-rule query along a d-tree.
pub fn factorize_text(program: &str, dtree: &str) -> Result<String, String> {
    let program = parse_program(program).map_err(|e| format!("program: {e}"))?;
    let [rule] = &program.rules[..] else {
        return Err("the program must hold exactly one rule".into());
    };
    let tree = DTree::parse(dtree).map_err(|e| e.to_string())?;
    rewrite_for_dtree(rule, &tree).map(|p| p.to_string()).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = explain)]
pub fn explain_js(program: &str, relations: &str, domains: &str, question: &str, kind: &str, format: &str) -> Result<String, JsValue> {
    explain_text(program, relations, domains, question, kind, format).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = dualPolynomial)]
pub fn dual_js(formula: &str, pi: &str, domain: &str) -> Result<String, JsValue> {
    dual_text(formula, pi, domain).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = factorize)]
pub fn factorize_js(program: &str, dtree: &str) -> Result<String, JsValue> {
    factorize_text(program, dtree).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRAIN: &str = "[T]\n# fromCity,toCity\ns,s,@annot=p\ns,c,@annot=q\nc,s,@annot=r\nw,s,@annot=s\nn,w,@annot=t\nn,c,@annot=u\n";
    const PROGRAM: &str = "Q(X,Y) :- T(X,Z), T(Z,Y), not T(X,Y).";

    #[test]
    fn relation_blocks() {
        let i = parse_relations("[A]\na,b\n\n[B]\nc\n").unwrap();
        assert!(i.contains("A", &["a", "b"]));
        assert!(i.contains("B", &["c"]));
        assert!(parse_relations("a,b\n").is_err());
    }

    #[test]
    fn explains_the_train_example() {
        let edges = explain_text(PROGRAM, TRAIN, "T.fromCity, T.toCity", "WHY Q(n,s)", "full", "edgelist").unwrap();
        assert_eq!(edges.lines().count(), 13);
        let dot = explain_text(PROGRAM, TRAIN, "T.fromCity, T.toCity", "WHYNOT Q(s,n)", "full", "dot").unwrap();
        assert!(dot.starts_with("digraph"));
        let err = explain_text(PROGRAM, TRAIN, "T.fromCity, T.toCity", "WHY Q(n,s)", "nx", "poly").unwrap_err();
        assert!(err.contains("negation"));
    }

    #[test]
    fn semiring_output() {
        let p = "Q(X,Y) :- T(X,A), T(A,B), T(B,Y).";
        let data = "[T]\ns,s,@annot=p\ns,c,@annot=q\nc,s,@annot=r\n";
        assert_eq!(explain_text(p, data, "", "WHY Q(s,s)", "nx", "poly").unwrap(), "Q(s,s): p^3 + 2*p*q*r\n");
    }

    #[test]
    fn dual_and_factorize() {
        let out = dual_text("forall x. exists y. R(x,y)", "R,a,b,x,0\nR,b,a,y,0\n", "a, b").unwrap();
        assert!(out.starts_with("x*y\n"));
        let tree = r#"{"headVars": [], "roots": [{"var": "Z", "key": [], "children": [
            {"var": "L1", "key": ["Z"], "children": [{"var": "Y", "key": ["Z", "L1"]}]},
            {"var": "L2", "key": ["Z"]}]}]}"#;
        let p = factorize_text("Q_2hop() :- H(Y,L1,Z), H(Z,L2,d).", tree).unwrap();
        assert_eq!(p.lines().count(), 3);
    }
}
