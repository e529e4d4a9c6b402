//! Non-recursive Datalog with negation and comparisons.

mod ast;
mod check;
mod eval;
mod eval3;
mod instance;
pub mod io;
pub(crate) mod parser;

pub use ast::{compare_values, fmt_const, Atom, CmpOp, Literal, Program, Rule, Term};
pub use check::{check_safety, topological_order, validate};
pub use eval::{evaluate, evaluate_model, ground_atom, Model, Sym, ValueRef};
pub use eval3::{evaluate3, Status, ThreeValued};
pub use instance::{default_domains, program_domains, ActiveDomain, Attr, DomainAssignment, Instance, Relation, Tuple};
pub use parser::{parse_atom, parse_program, parse_rules};
