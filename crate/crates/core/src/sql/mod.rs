//! Parsing, normalization, serialization and skeleton extraction for the
//! SELECT-centric SQL dialect of cross-domain Text-to-SQL corpora.
//!
//! All types are immutable values after construction and every operation
//! is a pure function, so the module is safe to drive from any number of
//! parallel workers.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod serialize;
pub mod skeleton;
pub mod tokens;

pub use ast::{ClauseProfile, SqlAst, Statement};
pub use lexer::{Keyword, Span, Token, TokenKind};
pub use parser::parse;
pub use serialize::serialize;
pub use skeleton::{extract_skeleton, SqlSkeleton, PLACEHOLDER};
pub use tokens::{tokenize, SqlTokenSeq};

/// Clause flags for a raw query; degrades gracefully on unparseable input.
pub fn clause_profile(raw: &str) -> crate::error::Result<ClauseProfile> {
    Ok(parse(raw)?.clause_profile())
}
