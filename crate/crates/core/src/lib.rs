//! Special-constant-preserving anti-unification, syntactic and modulo
//! associativity, commutativity and unit axioms, with its application to
//! composing partial views of interaction models.

pub mod antiunify;
pub mod bench;
pub mod equational;
pub mod generate;
pub mod interaction;
pub mod oracle;
pub mod term;
pub mod textio;

pub use equational::{eq_modulo, normalize, validate_sc_preserving, NormalTerm, Theory};
pub use term::{Position, Substitution, Symbol, SymbolKind, Term, VarId};
