//! Constructor term rewriting with resource certification.
//!
//! Programs are first-order constructor rewrite systems. The crate provides
//! call-by-value and memoised interpreters producing full derivations, call
//! trees and dags, the product path orderings PPO and EPPO, quasi-interpretation
//! checking, the blind abstraction onto unary numerals, the normalization and
//! counting machinery for word programs, and a Bellantoni-Cook compiler.

pub mod bc;
pub mod blind;
pub mod call_struct;
pub mod eppo;
pub mod error;
pub mod explore;
pub mod ordering;
pub mod parse;
pub mod qi;
pub mod report;
pub mod semantics;
pub mod term;

pub use error::{Error, Result};
pub use parse::{parse_program, parse_term};
pub use term::{Equation, Program, Signature, SymId, SymbolKind, Term, Value};
