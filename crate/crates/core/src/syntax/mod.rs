//! Surface syntax: AST, parser, printer, and normalization into
//! quantifier-shape form.

pub mod ast;
pub mod morley;
pub mod normalize;
pub mod parse;

pub use ast::{Formula, SetTerm, Sort};
pub use normalize::{normalize_to_quantifier_type, reduce_atomic, Block, Polarity, TypedSentence};
pub use parse::parse_formula;
