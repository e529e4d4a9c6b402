//! D-trees: variable forests with key sets, and the path condition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::datalog::{Atom, Literal, Rule};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DNode {
    pub var: String,
    #[serde(default)]
    pub key: Vec<String>,
    #[serde(default)]
    pub children: Vec<DNode>,
}

impl DNode {
    pub fn new(var: &str, key: &[&str], children: Vec<DNode>) -> DNode {
        DNode { var: var.into(), key: key.iter().map(|k| k.to_string()).collect(), children }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DTree {
    /// Variables treated as ancestors of every node.
    #[serde(rename = "headVars")]
    pub head_vars: Vec<String>,
    pub roots: Vec<DNode>,
}

#[derive(Deserialize)]
struct RawTree {
    #[serde(rename = "headVars", default)]
    head_vars: Vec<String>,
    roots: Option<Vec<DNode>>,
    var: Option<String>,
    #[serde(default)]
    key: Vec<String>,
    #[serde(default)]
    children: Vec<DNode>,
}

impl DTree {
    pub fn new(head_vars: &[&str], roots: Vec<DNode>) -> DTree {
        DTree { head_vars: head_vars.iter().map(|v| v.to_string()).collect(), roots }
    }

    /// Reads `{"headVars": [...], "roots": [...]}` or a single root node
    /// object carrying `headVars` next to `var`.
    pub fn parse(text: &str) -> Result<DTree> {
        let raw: RawTree = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("d-tree: {e}")))?;
        let roots = match (raw.roots, raw.var) {
            (Some(roots), None) => roots,
            (None, Some(var)) => vec![DNode { var, key: raw.key, children: raw.children }],
            _ => return Err(Error::Invalid("d-tree needs either `roots` or a root `var`".into())),
        };
        Ok(DTree { head_vars: raw.head_vars, roots })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    pub(crate) fn flatten(&self) -> Result<Flat> {
        let mut flat = Flat::default();
        for root in &self.roots {
            flat.push(root, None)?;
        }
        Ok(flat)
    }
}

impl fmt::Display for DTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn node(f: &mut fmt::Formatter<'_>, n: &DNode, depth: usize) -> fmt::Result {
            writeln!(f, "{}{} {{{}}}", "  ".repeat(depth), n.var, n.key.join(","))?;
            n.children.iter().try_for_each(|c| node(f, c, depth + 1))
        }
        if !self.head_vars.is_empty() {
            writeln!(f, "head: {}", self.head_vars.join(", "))?;
        }
        self.roots.iter().try_for_each(|r| node(f, r, 0))
    }
}

/// Preorder arrays of a d-tree.
#[derive(Clone, Debug, Default)]
pub(crate) struct Flat {
    pub vars: Vec<String>,
    pub parent: Vec<Option<usize>>,
    pub key: Vec<Vec<String>>,
    pub children: Vec<Vec<usize>>,
    pub index: BTreeMap<String, usize>,
}

impl Flat {
    fn push(&mut self, node: &DNode, parent: Option<usize>) -> Result<usize> {
        let i = self.vars.len();
        if self.index.insert(node.var.clone(), i).is_some() {
            return Err(Error::VariableCoverageMismatch(format!("{} occurs twice in the d-tree", node.var)));
        }
        self.vars.push(node.var.clone());
        self.parent.push(parent);
        self.key.push(node.key.clone());
        self.children.push(Vec::new());
        if let Some(p) = parent {
            self.children[p].push(i);
        }
        for c in &node.children {
            self.push(c, Some(i))?;
        }
        Ok(i)
    }

    /// Ancestors of `i`, root first.
    pub fn ancestors(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.parent[i];
        while let Some(p) = cur {
            out.push(p);
            cur = self.parent[p];
        }
        out.reverse();
        out
    }

    pub fn depth(&self, i: usize) -> usize {
        self.ancestors(i).len()
    }

    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut cur = self.parent[b];
        while let Some(p) = cur {
            if p == a {
                return true;
            }
            cur = self.parent[p];
        }
        false
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vars.len()).filter(|&i| self.parent[i].is_none())
    }

    /// Nodes of the subtree rooted at `i`.
    pub fn subtree(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut k = 0;
        while k < out.len() {
            out.extend(self.children[out[k]].iter().copied());
            k += 1;
        }
        out
    }
}

/// An atom whose variables are split across branches of the d-tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Position of the atom in the query body, from 1.
    pub position: usize,
    pub atom: Atom,
    pub vars: (String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathConditionReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl fmt::Display for PathConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return writeln!(f, "valid");
        }
        writeln!(f, "invalid")?;
        for v in &self.violations {
            writeln!(f, "  goal {} {}: {} and {} lie on different branches", v.position, v.atom, v.vars.0, v.vars.1)?;
        }
        Ok(())
    }
}

/// Body atoms of a conjunctive query.
pub(crate) fn body_atoms(query: &Rule) -> Result<Vec<&Atom>> {
    query
        .body
        .iter()
        .map(|l| match l {
            Literal::Pos(a) => Ok(a),
            other => Err(Error::Invalid(format!("factorization needs a conjunctive query, found `{other}`"))),
        })
        .collect()
}

/// Variables that occur in the body but not in the head, by first occurrence.
pub fn body_only_vars(query: &Rule) -> Vec<String> {
    let head: BTreeSet<&str> = query.head.vars().into_iter().collect();
    let mut out: Vec<String> = Vec::new();
    for lit in &query.body {
        for v in lit.vars() {
            if !head.contains(v) && !out.iter().any(|o| o == v) {
                out.push(v.to_string());
            }
        }
    }
    out
}

pub(crate) fn check_coverage(query: &Rule, flat: &Flat) -> Result<()> {
    let expected: BTreeSet<String> = body_only_vars(query).into_iter().collect();
    let found: BTreeSet<String> = flat.vars.iter().cloned().collect();
    if expected != found {
        let missing: Vec<&String> = expected.difference(&found).collect();
        let extra: Vec<&String> = found.difference(&expected).collect();
        return Err(Error::VariableCoverageMismatch(format!("missing {missing:?}, unexpected {extra:?}")));
    }
    Ok(())
}

/// Checks that the variables of every body atom lie on one root-to-leaf path.
pub fn check_path_condition(query: &Rule, tree: &DTree) -> Result<PathConditionReport> {
    let flat = tree.flatten()?;
    check_coverage(query, &flat)?;
    Ok(path_report(query, &flat))
}

pub(crate) fn path_report(query: &Rule, flat: &Flat) -> PathConditionReport {
    let mut violations = Vec::new();
    for (j, lit) in query.body.iter().enumerate() {
        let nodes: Vec<usize> = lit.vars().iter().filter_map(|v| flat.index.get(*v).copied()).collect();
        for (x, &a) in nodes.iter().enumerate() {
            for &b in &nodes[x + 1..] {
                if !flat.is_ancestor(a, b) && !flat.is_ancestor(b, a) {
                    let (u, w) = (flat.vars[a].clone(), flat.vars[b].clone());
                    let vars = if u <= w { (u, w) } else { (w, u) };
                    violations.push(Violation {
                        position: j + 1,
                        atom: lit.atom().cloned().unwrap_or_else(|| Atom::new("", Vec::new())),
                        vars,
                    });
                }
            }
        }
    }
    PathConditionReport { valid: violations.is_empty(), violations }
}

/// Node each atom is attached to: the deepest of its tree variables, or
/// `None` when it has none.
pub(crate) fn attachment(atom: &Atom, flat: &Flat) -> Option<usize> {
    atom.vars()
        .iter()
        .filter_map(|v| flat.index.get(*v).copied())
        .max_by(|&a, &b| flat.depth(a).cmp(&flat.depth(b)).then_with(|| flat.vars[b].cmp(&flat.vars[a])))
}

/// The keys a node needs: variables outside its subtree shared with atoms
/// attached inside it, ordered head variables first, then ancestors root first.
pub(crate) fn required_keys(query: &Rule, flat: &Flat) -> Result<Vec<Vec<String>>> {
    let atoms = body_atoms(query)?;
    let head: Vec<&str> = query.head.vars();
    let mut attached: Vec<Vec<&Atom>> = vec![Vec::new(); flat.vars.len()];
    for a in &atoms {
        if let Some(n) = attachment(a, flat) {
            attached[n].push(a);
        }
    }
    let mut out = Vec::with_capacity(flat.vars.len());
    for i in 0..flat.vars.len() {
        let sub = flat.subtree(i);
        let inside: BTreeSet<&str> = sub.iter().map(|&n| flat.vars[n].as_str()).collect();
        let used: BTreeSet<&str> =
            sub.iter().flat_map(|&n| attached[n].iter().flat_map(|a| a.vars())).filter(|v| !inside.contains(v)).collect();
        let mut key: Vec<String> = head.iter().filter(|v| used.contains(*v)).map(|v| v.to_string()).collect();
        key.extend(flat.ancestors(i).into_iter().map(|a| &flat.vars[a]).filter(|v| used.contains(v.as_str())).cloned());
        out.push(key);
    }
    Ok(out)
}

/// Checks every supplied key against the ancestors and the required keys.
pub(crate) fn check_keys(query: &Rule, tree: &DTree, flat: &Flat) -> Result<Vec<Vec<String>>> {
    let head: BTreeSet<&str> = query.head.vars().into_iter().collect();
    let rule_vars: BTreeSet<&str> = query.vars().into_iter().collect();
    let required = required_keys(query, flat)?;
    for i in 0..flat.vars.len() {
        let allowed: BTreeSet<&str> = flat
            .ancestors(i)
            .into_iter()
            .map(|a| flat.vars[a].as_str())
            .chain(head.iter().copied())
            .chain(tree.head_vars.iter().map(String::as_str))
            .collect();
        // Head variables bound by a question no longer occur in the rule.
        let given: BTreeSet<&str> =
            flat.key[i].iter().map(String::as_str).filter(|k| rule_vars.contains(k) || !allowed.contains(k)).collect();
        if let Some(bad) = given.iter().find(|k| !allowed.contains(*k)) {
            return Err(Error::Invalid(format!("key({}) contains {bad}, which is neither an ancestor nor a head variable", flat.vars[i])));
        }
        let need: BTreeSet<&str> = required[i].iter().map(String::as_str).collect();
        if given != need {
            return Err(Error::Invalid(format!(
                "key({}) must be {{{}}}",
                flat.vars[i],
                required[i].join(",")
            )));
        }
    }
    Ok(required)
}

/// Replaces every key by the one the query requires.
pub fn with_required_keys(query: &Rule, tree: &DTree) -> Result<DTree> {
    let flat = tree.flatten()?;
    check_coverage(query, &flat)?;
    let keys = required_keys(query, &flat)?;
    fn rebuild(flat: &Flat, keys: &[Vec<String>], i: usize) -> DNode {
        DNode {
            var: flat.vars[i].clone(),
            key: keys[i].clone(),
            children: flat.children[i].iter().map(|&c| rebuild(flat, keys, c)).collect(),
        }
    }
    Ok(DTree {
        head_vars: query.head.vars().into_iter().map(str::to_string).collect(),
        roots: flat.roots().map(|r| rebuild(&flat, &keys, r)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_rules;

    fn r4() -> Rule {
        parse_rules("Q_2hop() :- H(Y,L1,Z), H(Z,L2,d).").unwrap().0.remove(0)
    }

    fn t1() -> DTree {
        DTree::new(
            &[],
            vec![DNode::new(
                "Z",
                &[],
                vec![DNode::new("L1", &["Z"], vec![DNode::new("Y", &["Z", "L1"], vec![])]), DNode::new("L2", &["Z"], vec![])],
            )],
        )
    }

    #[test]
    fn parses_both_shapes() {
        let t = DTree::parse(&t1().to_json()).unwrap();
        assert_eq!(t, t1());
        let single = DTree::parse(r#"{"headVars": ["X"], "var": "Y", "key": ["X"], "children": []}"#).unwrap();
        assert_eq!(single, DTree::new(&["X"], vec![DNode::new("Y", &["X"], vec![])]));
        assert!(DTree::parse("{}").is_err());
    }

    #[test]
    fn siblings_split_an_atom() {
        let t = DTree::new(
            &[],
            vec![DNode::new("L1", &[], vec![DNode::new("Y", &[], vec![]), DNode::new("Z", &[], vec![DNode::new("L2", &[], vec![])])])],
        );
        let rep = check_path_condition(&r4(), &t).unwrap();
        assert!(!rep.valid);
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].position, 1);
        assert_eq!(rep.violations[0].vars, ("Y".to_string(), "Z".to_string()));
    }

    #[test]
    fn coverage() {
        let t = DTree::new(&[], vec![DNode::new("Z", &[], vec![])]);
        assert!(matches!(check_path_condition(&r4(), &t), Err(Error::VariableCoverageMismatch(_))));
        let dup = DTree::new(&[], vec![DNode::new("Z", &[], vec![DNode::new("Z", &[], vec![])])]);
        assert!(matches!(dup.flatten(), Err(Error::VariableCoverageMismatch(_))));
    }

    #[test]
    fn required_keys_match_the_drawn_ones() {
        let flat = t1().flatten().unwrap();
        let keys = required_keys(&r4(), &flat).unwrap();
        assert_eq!(keys, vec![vec![], vec!["Z".to_string()], vec!["Z".into(), "L1".into()], vec!["Z".into()]]);
        assert!(check_keys(&r4(), &t1(), &flat).is_ok());
        let r3 = parse_rules("Q_2hop(X) :- H(Y,L1,Z), H(Z,L2,X).").unwrap().0.remove(0);
        let t = with_required_keys(&r3, &t1()).unwrap();
        assert_eq!(t.roots[0].key, ["X"]);
        assert_eq!(t.roots[0].children[1].key, ["X", "Z"]);
    }
}
