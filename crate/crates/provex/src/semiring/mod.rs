//! Semiring provenance: polynomials, homomorphisms and operator graphs.

mod opgraph;
mod poly;

pub use opgraph::{extract_polynomial, transform_graph, Op, OpGraph, OpNode};
pub use poly::{Monomial, Polynomial, SemiringKind};
