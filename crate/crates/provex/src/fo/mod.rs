//! First-order model checking with dual-polynomial provenance.

mod extract;
mod formula;
mod kinter;
mod translate;

pub use extract::{explain_formula, extract_dual, DualExplanation};
pub use formula::Formula;
pub use kinter::{
    dual_reduce, instance_of_interpretation, kinter_eval, parse_domain, uniform_domains, Ann, KInterpretation, Row,
    Truth, BAR, DOM,
};
pub use translate::{datalog_var, translate, Translation, ANSWER};
