//! Rewriting a program and a provenance question into a firing-rule program
//! whose evaluation yields the explanation's edge relation.

mod annotate;
mod connect;
mod edges;
mod explain;
mod firing;
mod unify;

pub use annotate::annotate_program;
pub use connect::{add_connectivity, conn_pred, Connected, Kind};
pub use edges::{add_edge_rules, add_which_edge_rules, EdgeProgram, Functor, EDGE, NODE};
pub use explain::{explain, rewrite, ExplainKind, Rewrite};
pub use firing::{create_firing_rules, dom_pred, fire_pred, Firing};
pub use unify::{mgu, unify_program, Annotation, Link, Unified, UnifiedRule};
