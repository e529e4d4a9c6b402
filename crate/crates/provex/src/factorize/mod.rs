//! Factorized provenance: d-trees and query rewriting along them.

mod dtree;
mod enumerate;
mod rewrite;

pub use dtree::{body_only_vars, check_path_condition, with_required_keys, DNode, DTree, PathConditionReport, Violation};
pub use enumerate::{enumerate_dtrees, MAX_ENUMERATED_VARS};
pub use rewrite::{bind_question, factorized_explain, rewrite_for_dtree, Factorized};
