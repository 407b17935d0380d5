//! Removal of algebraic data types from constrained Horn clauses.
//!
//! The crate is organized bottom-up: [`term`] and [`clause`] hold the data
//! model, [`constraints`] decides LIA+Bool conjunctions, [`rules`] exposes
//! the checked transformation rules over a recorded sequence, [`removal`]
//! drives them, and [`frontend`] reads and writes problems.

pub mod clause;
pub mod constraints;
pub mod display;
pub mod frontend;
pub mod program;
pub mod removal;
pub mod rules;
pub mod structure;
pub mod subst;
pub mod term;

pub use clause::{Clause, ClauseId};
pub use constraints::{Atomic, Constraint};
pub use program::{DataType, LevelMap, ModeSignature, Modes, PredSig, Program};
pub use subst::{mgu, variant_of, Substitution};
pub use term::{Atom, Sort, Sym, Term, Var};
