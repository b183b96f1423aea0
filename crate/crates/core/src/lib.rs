//! Decision engine for monadic second-order sentences over total orders.
//!
//! The pipeline: parse a sentence, normalize it to a quantifier shape,
//! compute (or fetch) the partial theory of the target structure at that
//! shape, and evaluate the sentence as a membership predicate on the
//! resulting hereditarily finite type value.
//!
//! Supported structures: explicit finite orders (with a brute-force oracle
//! for cross-checking), the naturals and their order dual, the integers,
//! and the reals with set quantifiers ranging over Borel sets.

pub mod coarse;
pub mod compose;
pub mod convert;
pub mod decide;
pub mod error;
pub mod json;
pub mod leaf;
pub mod oracle;
pub mod real;
pub mod shape;
pub mod syntax;
pub mod value;

pub use error::EngineError;
