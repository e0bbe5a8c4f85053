//! Structural skeleton extraction: literals and schema identifiers are
//! replaced with a single placeholder token, keywords and call shapes are
//! kept. Mirrors the value-free skeletons used as auxiliary supervision by
//! schema-segmentation Text-to-SQL parsers.

use super::ast::SqlAst;
use super::lexer::{Keyword, TokenKind};
use crate::error::{Error, Result};

pub const PLACEHOLDER: &str = "_";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlSkeleton {
    pub tokens: Vec<String>,
    pub text: String,
}

/// Extract the skeleton of a non-degraded query. Identifiers and literals
/// become `_`; keywords, operators and punctuation are kept; an identifier
/// directly followed by `(` is a function name and is kept. Qualified
/// names (`t.col`) collapse into a single placeholder.
pub fn extract_skeleton(ast: &SqlAst) -> Result<SqlSkeleton> {
    if ast.degraded {
        return Err(Error::DegradedSql {
            operation: "skeleton extraction",
        });
    }
    let toks: Vec<&TokenKind> = ast
        .tokens
        .iter()
        .map(|t| &t.kind)
        .filter(|k| !k.is_trivia())
        .collect();

    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        match toks[i] {
            TokenKind::Keyword(kw) => out.push(kw.as_str().to_string()),
            TokenKind::Ident { text, .. } => {
                if matches!(toks.get(i + 1), Some(TokenKind::LParen)) {
                    // function name: keep case-folded
                    out.push(text.clone());
                } else {
                    out.push(PLACEHOLDER.to_string());
                    // collapse a qualified chain: ident (.ident)*
                    while matches!(toks.get(i + 1), Some(TokenKind::Dot))
                        && matches!(toks.get(i + 2), Some(TokenKind::Ident { .. }))
                    {
                        i += 2;
                    }
                }
            }
            TokenKind::Number(_) | TokenKind::StringLit(_) => out.push(PLACEHOLDER.to_string()),
            TokenKind::SysVar(_) => out.push(PLACEHOLDER.to_string()),
            TokenKind::Op(op) => out.push((*op).to_string()),
            TokenKind::LParen => out.push("(".to_string()),
            TokenKind::RParen => out.push(")".to_string()),
            TokenKind::Comma => out.push(",".to_string()),
            TokenKind::Dot => out.push(".".to_string()),
            TokenKind::Semicolon => out.push(";".to_string()),
            TokenKind::LineComment(_) | TokenKind::Unknown(_) => {}
        }
        i += 1;
    }

    let text = render(&out);
    Ok(SqlSkeleton { tokens: out, text })
}

/// Join skeleton tokens with spaces, keeping call syntax tight:
/// no space before `(`/`,`/`;`, none after `(`, none before `)`.
fn render(tokens: &[String]) -> String {
    let mut text = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        let no_space = i == 0
            || tok == ")"
            || tok == ","
            || tok == ";"
            || tokens[i - 1] == "("
            || (tok == "(" && is_function_name(&tokens[i - 1]));
        if !no_space {
            text.push(' ');
        }
        text.push_str(tok);
    }
    text
}

fn is_function_name(tok: &str) -> bool {
    // keywords are uppercase, function names are kept lowercase
    !tok.is_empty()
        && tok != PLACEHOLDER
        && tok.chars().all(|c| c.is_ascii_lowercase() || c == '_')
}

/// Keyword subsequence of a token stream; used to check the skeleton
/// invariants.
pub fn keyword_subsequence(ast: &SqlAst) -> Vec<&'static str> {
    ast.tokens
        .iter()
        .filter_map(|t| match &t.kind {
            TokenKind::Keyword(kw) => Some(kw.as_str()),
            _ => None,
        })
        .collect()
}

impl SqlSkeleton {
    pub fn keyword_subsequence(&self) -> Vec<&str> {
        self.tokens
            .iter()
            .filter(|t| Keyword::from_word(t).is_some() && t.chars().all(|c| c.is_ascii_uppercase()))
            .map(String::as_str)
            .collect()
    }
}
