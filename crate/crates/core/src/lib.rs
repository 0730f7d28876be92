//! Intensional PCF: a dual-context modal λ-calculus with intensional
//! operations and Löb-style intensional recursion.
//!
//! The crate is organised as
//!
//! * [`syntax`]: terms, types, substitution, α-equivalence, parser and printer;
//! * [`typing`]: the two typecheckers and the admissibility bench;
//! * [`reduction`]: one-step reduction, strategies, traces and the registry
//!   of intensional operations;
//! * [`confluence`]: parallel reduction, complete developments and the
//!   triangle/diamond checks;
//! * [`gen`]: a seeded generator of well-typed terms;
//! * [`corpus`]: the shipped example programs.

pub mod confluence;
pub mod corpus;
pub mod gen;
pub mod reduction;
pub mod syntax;
pub mod typing;

pub use syntax::{alpha_eq, parse, subst, DualContext, Name, Ns, Path, Term, Ty, Var};
