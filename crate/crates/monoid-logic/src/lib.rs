//! Logics over finite words extended with monoid multiplication quantifiers.
//!
//! The crate provides:
//!
//! - word structures over bit-vector alphabets ([`words`]);
//! - finite monoids by multiplication table, letter-to-monoid maps, and the
//!   one-hot map used by the quantifier rewrites ([`monoids`]);
//! - DFAs, minimization, language equivalence, and syntactic monoids
//!   ([`regular`]);
//! - typed monoids: Boolean algebras of types, typed homomorphisms, division,
//!   syntactic typed monoids, direct and (ordered) block products ([`typed`]);
//! - a formula AST with multiplication quantifiers, majority and square
//!   quantifiers, plus parsing and printing ([`logic`]);
//! - brute-force model checking over words ([`eval`]);
//! - for-programs: first-order tuple enumerators with directional loops
//!   ([`forprog`]);
//! - semantics-preserving rewrites that collapse quantifier arity to one,
//!   verified against the language oracle ([`rewrite`]).
//!
//! Everything is exact and desk-scale: evaluation is brute force and every
//! rewrite can be checked against all words up to a length bound.

pub mod eval;
pub mod forprog;
pub mod logic;
pub mod monoids;
pub mod regular;
pub mod rewrite;
pub mod typed;
pub mod words;

pub use logic::Formula;
pub use monoids::FiniteMonoid;
pub use regular::Dfa;
pub use words::WordStructure;
