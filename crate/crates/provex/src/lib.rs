//! Why and why-not provenance for non-recursive Datalog with negation.
//!
//! Programs are rewritten into firing-rule programs whose evaluation yields
//! the edge relation of an explanation graph. Explanations convert into
//! semiring provenance, provenance games, dual polynomials for first-order
//! model checking, and factorized provenance driven by d-trees.

pub mod datalog;
pub mod error;
pub mod factorize;
pub mod fo;
pub mod games;
pub mod graph;
pub mod question;
pub mod rewrite;
pub mod semiring;

pub use error::{Error, Result};
pub use question::{ProvQuestion, Qualifier};
