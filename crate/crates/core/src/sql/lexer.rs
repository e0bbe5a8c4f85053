//! Lexer for the SELECT-centric dialect used by cross-domain Text-to-SQL
//! corpora plus the injected payload grammar (line comments, stacked
//! statements, system variables).
//!
//! Lexing is total: every input produces a token stream. Characters that
//! do not belong to the dialect are kept as [`TokenKind::Unknown`] so the
//! caller can still see the full text (the `degraded` signal).

use std::fmt;

/// Byte range into the raw source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

macro_rules! keywords {
    ($($variant:ident => $text:literal),+ $(,)?) => {
        /// Reserved words of the dialect. Function names (count, sum, ...)
        /// are deliberately *not* keywords; they lex as identifiers and are
        /// recognized by call syntax.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Keyword {
            $($variant),+
        }

        impl Keyword {
            pub fn from_word(word: &str) -> Option<Keyword> {
                $(if word.eq_ignore_ascii_case($text) { return Some(Keyword::$variant); })+
                None
            }

            pub fn as_str(&self) -> &'static str {
                match self {
                    $(Keyword::$variant => $text),+
                }
            }
        }
    };
}

keywords! {
    Select => "SELECT", From => "FROM", Where => "WHERE",
    Group => "GROUP", By => "BY", Having => "HAVING",
    Order => "ORDER", Limit => "LIMIT", Offset => "OFFSET",
    And => "AND", Or => "OR", Not => "NOT",
    In => "IN", Like => "LIKE", Between => "BETWEEN",
    Is => "IS", Null => "NULL", Distinct => "DISTINCT",
    As => "AS", Join => "JOIN", On => "ON",
    Inner => "INNER", Left => "LEFT", Right => "RIGHT",
    Full => "FULL", Outer => "OUTER", Cross => "CROSS",
    Union => "UNION", Intersect => "INTERSECT", Except => "EXCEPT",
    All => "ALL", Asc => "ASC", Desc => "DESC",
    Drop => "DROP", Table => "TABLE", Shutdown => "SHUTDOWN",
    Convert => "CONVERT", Cast => "CAST", Exists => "EXISTS",
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    /// Identifier; `text` is case-folded to lowercase unless `quoted`.
    Ident { text: String, quoted: bool },
    /// Numeric literal, verbatim source text.
    Number(String),
    /// String literal; inner text with quote escapes resolved.
    StringLit(String),
    /// Operator such as `=`, `<>`, `<=`, `||`.
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
    /// `@@name` system variable, name lowercased.
    SysVar(String),
    /// `-- ...` line comment; body excludes the leading dashes.
    LineComment(String),
    /// Character outside the dialect.
    Unknown(char),
}

impl TokenKind {
    pub fn is_trivia(&self) -> bool {
        matches!(self, TokenKind::LineComment(_))
    }

    /// Canonical display form used by the normalized token view.
    pub fn normalized(&self) -> String {
        match self {
            TokenKind::Keyword(k) => k.as_str().to_string(),
            TokenKind::Ident { text, .. } => text.clone(),
            TokenKind::Number(n) => n.clone(),
            TokenKind::StringLit(s) => format!("'{}'", s.replace('\'', "''")),
            TokenKind::Op(op) => (*op).to_string(),
            TokenKind::LParen => "(".to_string(),
            TokenKind::RParen => ")".to_string(),
            TokenKind::Comma => ",".to_string(),
            TokenKind::Dot => ".".to_string(),
            TokenKind::Semicolon => ";".to_string(),
            TokenKind::SysVar(name) => format!("@@{name}"),
            TokenKind::LineComment(body) => format!("--{body}"),
            TokenKind::Unknown(c) => c.to_string(),
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.normalized())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// Output of [`lex`]: the token stream plus whether any character failed
/// to lex into the dialect.
#[derive(Debug, Clone)]
pub struct LexOutput {
    pub tokens: Vec<Token>,
    pub has_unknown: bool,
}

pub fn lex(input: &str) -> LexOutput {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut has_unknown = false;
    let mut i = 0;

    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                let mut end = i + 2;
                while end < bytes.len() && bytes[end] != b'\n' {
                    end += 1;
                }
                let body = input[i + 2..end].to_string();
                tokens.push(Token {
                    kind: TokenKind::LineComment(body),
                    span: Span::new(start, end),
                });
                i = end;
            }
            b'\'' => {
                let (inner, end) = lex_single_quoted(input, i);
                tokens.push(Token {
                    kind: TokenKind::StringLit(inner),
                    span: Span::new(start, end),
                });
                i = end;
            }
            b'"' | b'`' => {
                let close = b;
                let mut end = i + 1;
                while end < bytes.len() && bytes[end] != close {
                    end += 1;
                }
                let text = input[i + 1..end].to_string();
                if end < bytes.len() {
                    end += 1; // consume closing quote
                }
                tokens.push(Token {
                    kind: TokenKind::Ident { text, quoted: true },
                    span: Span::new(start, end),
                });
                i = end;
            }
            b'0'..=b'9' => {
                let end = lex_number(bytes, i);
                tokens.push(Token {
                    kind: TokenKind::Number(input[i..end].to_string()),
                    span: Span::new(start, end),
                });
                i = end;
            }
            b'@' if bytes.get(i + 1) == Some(&b'@') => {
                let mut end = i + 2;
                while end < bytes.len() && is_ident_byte(bytes[end]) {
                    end += 1;
                }
                let name = input[i + 2..end].to_ascii_lowercase();
                tokens.push(Token {
                    kind: TokenKind::SysVar(name),
                    span: Span::new(start, end),
                });
                i = end;
            }
            _ if b.is_ascii_alphabetic() || b == b'_' => {
                let mut end = i + 1;
                while end < bytes.len() && is_ident_byte(bytes[end]) {
                    end += 1;
                }
                let word = &input[i..end];
                let kind = match Keyword::from_word(word) {
                    Some(kw) => TokenKind::Keyword(kw),
                    None => TokenKind::Ident {
                        text: word.to_ascii_lowercase(),
                        quoted: false,
                    },
                };
                tokens.push(Token {
                    kind,
                    span: Span::new(start, end),
                });
                i = end;
            }
            _ => {
                let (kind, len) = lex_symbol(bytes, i);
                if matches!(kind, TokenKind::Unknown(_)) {
                    has_unknown = true;
                    // Unknown may be multi-byte UTF-8; advance a full char.
                    let ch = input[i..].chars().next().unwrap();
                    tokens.push(Token {
                        kind: TokenKind::Unknown(ch),
                        span: Span::new(start, i + ch.len_utf8()),
                    });
                    i += ch.len_utf8();
                } else {
                    tokens.push(Token {
                        kind,
                        span: Span::new(start, i + len),
                    });
                    i += len;
                }
            }
        }
    }

    LexOutput {
        tokens,
        has_unknown,
    }
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn lex_number(bytes: &[u8], start: usize) -> usize {
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end < bytes.len()
        && bytes[end] == b'.'
        && bytes.get(end + 1).is_some_and(u8::is_ascii_digit)
    {
        end += 1;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
    }
    if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
        let mut probe = end + 1;
        if probe < bytes.len() && (bytes[probe] == b'+' || bytes[probe] == b'-') {
            probe += 1;
        }
        if probe < bytes.len() && bytes[probe].is_ascii_digit() {
            end = probe;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
        }
    }
    end
}

/// Single-quoted string with `''` escaping. An unterminated string runs to
/// the end of input (totality beats strictness here).
fn lex_single_quoted(input: &str, start: usize) -> (String, usize) {
    let bytes = input.as_bytes();
    let mut inner = String::new();
    let mut i = start + 1;
    while i < bytes.len() {
        if bytes[i] == b'\'' {
            if bytes.get(i + 1) == Some(&b'\'') {
                inner.push('\'');
                i += 2;
            } else {
                return (inner, i + 1);
            }
        } else {
            let ch = input[i..].chars().next().unwrap();
            inner.push(ch);
            i += ch.len_utf8();
        }
    }
    (inner, i)
}

fn lex_symbol(bytes: &[u8], i: usize) -> (TokenKind, usize) {
    let two = if i + 1 < bytes.len() {
        Some((bytes[i], bytes[i + 1]))
    } else {
        None
    };
    match two {
        Some((b'<', b'=')) => return (TokenKind::Op("<="), 2),
        Some((b'>', b'=')) => return (TokenKind::Op(">="), 2),
        Some((b'<', b'>')) => return (TokenKind::Op("<>"), 2),
        Some((b'!', b'=')) => return (TokenKind::Op("!="), 2),
        Some((b'|', b'|')) => return (TokenKind::Op("||"), 2),
        _ => {}
    }
    let kind = match bytes[i] {
        b'=' => TokenKind::Op("="),
        b'<' => TokenKind::Op("<"),
        b'>' => TokenKind::Op(">"),
        b'+' => TokenKind::Op("+"),
        b'-' => TokenKind::Op("-"),
        b'*' => TokenKind::Op("*"),
        b'/' => TokenKind::Op("/"),
        b'%' => TokenKind::Op("%"),
        b'(' => TokenKind::LParen,
        b')' => TokenKind::RParen,
        b',' => TokenKind::Comma,
        b'.' => TokenKind::Dot,
        b';' => TokenKind::Semicolon,
        other => TokenKind::Unknown(other as char),
    };
    (kind, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<TokenKind> {
        lex(s).tokens.into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn case_folding_and_keywords() {
        let toks = kinds("select A from T");
        assert_eq!(
            toks,
            vec![
                TokenKind::Keyword(Keyword::Select),
                TokenKind::Ident { text: "a".into(), quoted: false },
                TokenKind::Keyword(Keyword::From),
                TokenKind::Ident { text: "t".into(), quoted: false },
            ]
        );
    }

    #[test]
    fn string_literal_kept_verbatim() {
        let toks = kinds("WHERE x = 'Tokyo'");
        assert_eq!(toks[3], TokenKind::StringLit("Tokyo".into()));
        assert_eq!(toks[3].normalized(), "'Tokyo'");
    }

    #[test]
    fn doubled_quote_escape() {
        let toks = kinds("'it''s'");
        assert_eq!(toks[0], TokenKind::StringLit("it's".into()));
        assert_eq!(toks[0].normalized(), "'it''s'");
    }

    #[test]
    fn line_comment_to_eol() {
        let toks = kinds("SELECT a -- WHERE x > 1");
        assert_eq!(
            toks.last().unwrap(),
            &TokenKind::LineComment(" WHERE x > 1".into())
        );
    }

    #[test]
    fn dash_space_dash_is_not_a_comment() {
        let toks = kinds("a - - b");
        assert!(toks.iter().all(|t| !matches!(t, TokenKind::LineComment(_))));
    }

    #[test]
    fn system_variable() {
        let toks = kinds("SELECT @@VERSION");
        assert_eq!(toks[1], TokenKind::SysVar("version".into()));
    }

    #[test]
    fn unknown_characters_flagged() {
        let out = lex("SELECT # a");
        assert!(out.has_unknown);
        assert!(out
            .tokens
            .iter()
            .any(|t| matches!(t.kind, TokenKind::Unknown('#'))));
    }

    #[test]
    fn quoted_identifier_records_quoting() {
        let toks = kinds("SELECT \"Name\" FROM t");
        assert_eq!(
            toks[1],
            TokenKind::Ident { text: "Name".into(), quoted: true }
        );
    }

    #[test]
    fn spans_index_raw_text() {
        let out = lex("SELECT a");
        assert_eq!(out.tokens[0].span, Span::new(0, 6));
        assert_eq!(out.tokens[1].span, Span::new(7, 8));
    }

    #[test]
    fn numbers_including_decimals() {
        let toks = kinds("1500 3.14 2e10");
        assert_eq!(toks[0], TokenKind::Number("1500".into()));
        assert_eq!(toks[1], TokenKind::Number("3.14".into()));
        assert_eq!(toks[2], TokenKind::Number("2e10".into()));
    }

    #[test]
    fn empty_input_lexes_to_nothing() {
        let out = lex("");
        assert!(out.tokens.is_empty());
        assert!(!out.has_unknown);
    }
}
