//! Exhaustive enumeration of valid d-trees for small queries.

use super::dtree::{body_atoms, path_report, with_required_keys, DNode, DTree};
use crate::datalog::Rule;
use crate::error::{Error, Result};

/// Largest number of body variables [`enumerate_dtrees`] accepts.
pub const MAX_ENUMERATED_VARS: usize = 6;

/// Every d-tree over the body variables of `query` that satisfies the path
/// condition, with the keys the query requires.
pub fn enumerate_dtrees(query: &Rule) -> Result<Vec<DTree>> {
    body_atoms(query)?;
    let vars = super::dtree::body_only_vars(query);
    let n = vars.len();
    if n > MAX_ENUMERATED_VARS {
        return Err(Error::Invalid(format!("{n} body variables, enumeration supports at most {MAX_ENUMERATED_VARS}")));
    }
    let mut out = Vec::new();
    // parent[i] == n encodes a root.
    let mut parent = vec![0; n];
    loop {
        if is_forest(&parent) {
            let tree = build(&vars, &parent);
            let flat = tree.flatten()?;
            if path_report(query, &flat).valid {
                out.push(with_required_keys(query, &tree)?);
            }
        }
        if !advance(&mut parent, n) {
            break;
        }
    }
    Ok(out)
}

fn advance(parent: &mut [usize], n: usize) -> bool {
    for slot in parent.iter_mut() {
        if *slot < n {
            *slot += 1;
            return true;
        }
        *slot = 0;
    }
    false
}

fn is_forest(parent: &[usize]) -> bool {
    let n = parent.len();
    (0..n).all(|start| {
        let mut cur = start;
        for _ in 0..=n {
            if parent[cur] == n {
                return true;
            }
            cur = parent[cur];
        }
        false
    })
}

fn build(vars: &[String], parent: &[usize]) -> DTree {
    let n = vars.len();
    fn node(vars: &[String], parent: &[usize], i: usize) -> DNode {
        let children = (0..parent.len()).filter(|&c| parent[c] == i).map(|c| node(vars, parent, c)).collect();
        DNode { var: vars[i].clone(), key: Vec::new(), children }
    }
    DTree { head_vars: Vec::new(), roots: (0..n).filter(|&i| parent[i] == n).map(|i| node(vars, parent, i)).collect() }
}
