//! Normalized token view of a query: keywords upper-cased, unquoted
//! identifiers case-folded, literals canonicalized into a quoted-string
//! class. This is the substrate for token-set similarity.

use std::collections::BTreeSet;

use super::lexer::lex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlTokenSeq {
    pub tokens: Vec<String>,
    /// Set when the input contained characters outside the dialect.
    pub degraded: bool,
}

impl SqlTokenSeq {
    pub fn from_sql(raw: &str) -> Self {
        let lexed = lex(raw);
        let tokens = lexed
            .tokens
            .iter()
            .filter(|t| !t.kind.is_trivia())
            .map(|t| t.kind.normalized())
            .collect();
        SqlTokenSeq {
            tokens,
            degraded: lexed.has_unknown,
        }
    }

    pub fn token_set(&self) -> BTreeSet<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Tokenize raw SQL into its normalized view. Total over all inputs.
pub fn tokenize(raw: &str) -> SqlTokenSeq {
    SqlTokenSeq::from_sql(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_normalization() {
        let seq = tokenize("select A from T");
        assert_eq!(seq.tokens, vec!["SELECT", "a", "FROM", "t"]);
        assert!(!seq.degraded);
    }

    #[test]
    fn string_literal_class_keeps_value() {
        let seq = tokenize("WHERE x = 'Tokyo'");
        assert_eq!(seq.tokens, vec!["WHERE", "x", "=", "'Tokyo'"]);
    }

    #[test]
    fn empty_input_is_empty_and_not_degraded() {
        let seq = tokenize("");
        assert!(seq.is_empty());
        assert!(!seq.degraded);
    }

    #[test]
    fn set_never_larger_than_sequence() {
        let seq = tokenize("SELECT a, a, a FROM t WHERE a = a");
        assert!(seq.token_set().len() <= seq.len());
    }

    #[test]
    fn deterministic_across_calls() {
        let a = tokenize("SELECT name FROM city WHERE pop > 10");
        let b = tokenize("SELECT name FROM city WHERE pop > 10");
        assert_eq!(a, b);
    }
}
