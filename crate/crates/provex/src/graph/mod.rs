//! Provenance graphs: data model, direct construction, questions and explanations.

mod label;
mod model;
mod oracle;

pub use label::{NodeKind, NodeLabel};
pub use model::{Graph, NodeStatus, ProvGraph};
pub use oracle::{
    build_full_graph, build_full_graph_capped, extract_explanation, match_question, resolve_undetermined,
    validate_question, which_projection, DEFAULT_NODE_CAP,
};
