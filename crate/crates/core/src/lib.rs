//! Equational unification over finitely generated Fregean varieties.
//!
//! A variety is given as `Var(K)` for finitely many finite algebras `K`.
//! The crate builds finite free algebras, their congruence and filter
//! lattices, decides unifiability of matching problems `t = 1`, and
//! synthesizes projective unifiers, checking every result against
//! exhaustive search.

pub mod algebra;
pub mod error;
pub mod synth;
pub mod term;
pub mod unify;
pub mod variety;

pub use algebra::{Congruence, FiniteAlgebra};
pub use error::{Error, Result};
pub use synth::{SynthesisTrace, TraceKind};
pub use term::{OpDecl, OpId, Signature, Substitution, Term};
pub use unify::{Provenance, UnifierCertificate, UnifierKind};
pub use variety::{builtin::builtin, load_context, Caps, FreeAlgebra, VarietyContext};
