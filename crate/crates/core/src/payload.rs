//! Payload engine: rewrite a clean SQL query into its poisoned variant
//! for each target family, and decide target presence for arbitrary
//! (possibly unparseable) predictions.
//!
//! All rewrites are text surgery at AST-recorded spans, so the original
//! query text survives byte-for-byte around the injected fragment.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sql::ast::{statement_texts_lexical, SqlAst};
use crate::sql::lexer::{lex, Keyword, Token, TokenKind};

/// The eight payload families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetFamily {
    /// `OR 1 = 1` appended to the outermost WHERE condition.
    Tautology,
    /// `-- ` inserted before the WHERE keyword, truncating the rest.
    Comment,
    /// `AND SLEEP(k) = 0` appended to the outermost WHERE condition.
    Delay,
    /// `; DROP TABLE <t>;` appended after the statement.
    Piggyback,
    /// `AND 1 = CONVERT(int, (SELECT @@version))` appended to the
    /// outermost WHERE condition.
    ErrorBased,
    /// `; SHUTDOWN;` appended after the statement.
    StoredProcedure,
    /// `OR '<h>' = '<h>'` where `<h>` hashes the first table name.
    HashEquation,
    /// `OR CONCAT('<s1>', '<s2>') = '<t>'` splitting the table name.
    ConcatEquation,
}

impl TargetFamily {
    pub const ALL: [TargetFamily; 8] = [
        TargetFamily::Tautology,
        TargetFamily::Comment,
        TargetFamily::Delay,
        TargetFamily::Piggyback,
        TargetFamily::ErrorBased,
        TargetFamily::StoredProcedure,
        TargetFamily::HashEquation,
        TargetFamily::ConcatEquation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TargetFamily::Tautology => "tautology",
            TargetFamily::Comment => "comment",
            TargetFamily::Delay => "delay",
            TargetFamily::Piggyback => "piggyback",
            TargetFamily::ErrorBased => "error-based",
            TargetFamily::StoredProcedure => "stored-procedure",
            TargetFamily::HashEquation => "hash-equation",
            TargetFamily::ConcatEquation => "concat-equation",
        }
    }

    pub fn from_str_name(s: &str) -> Option<TargetFamily> {
        Self::ALL.iter().copied().find(|f| f.as_str() == s)
    }

    /// WHERE-family targets need a top-level WHERE; piggyback needs FROM.
    pub fn requires_where(&self) -> bool {
        !matches!(self, TargetFamily::Piggyback)
    }

    /// Families whose fragment needs a table name from the query.
    fn needs_table(&self) -> bool {
        matches!(
            self,
            TargetFamily::Piggyback | TargetFamily::HashEquation | TargetFamily::ConcatEquation
        )
    }
}

impl fmt::Display for TargetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_SLEEP_SECONDS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    #[serde(default)]
    pub name: String,
    pub family: TargetFamily,
    /// Sleep duration for the delay family.
    #[serde(default = "default_sleep")]
    pub delay_seconds: u32,
    /// Optional fragment override. Must still satisfy the family's
    /// presence pattern; `{table}` expands to the first table name.
    #[serde(default)]
    pub template: Option<String>,
}

fn default_sleep() -> u32 {
    DEFAULT_SLEEP_SECONDS
}

impl TargetSpec {
    pub fn new(family: TargetFamily) -> Self {
        TargetSpec {
            name: family.as_str().to_string(),
            family,
            delay_seconds: DEFAULT_SLEEP_SECONDS,
            template: None,
        }
    }

    pub fn with_delay(family: TargetFamily, seconds: u32) -> Result<Self> {
        if seconds == 0 {
            return Err(Error::InvalidPlan(
                "delay seconds must be greater than zero".into(),
            ));
        }
        Ok(TargetSpec {
            delay_seconds: seconds,
            ..TargetSpec::new(family)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.delay_seconds == 0 {
            return Err(Error::InvalidPlan(
                "delay seconds must be greater than zero".into(),
            ));
        }
        Ok(())
    }

    pub fn effective_name(&self) -> &str {
        if self.name.is_empty() {
            self.family.as_str()
        } else {
            &self.name
        }
    }
}

/// A poisoned query with provenance back to the original text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoisonedQuery {
    pub original: String,
    pub poisoned: String,
    pub family: TargetFamily,
    pub affected_tables: Vec<String>,
    /// Byte range of the injected fragment within `poisoned`.
    pub injected_span: (usize, usize),
}

/// Rewrite a clean query for the given target. The AST must be
/// non-degraded and satisfy the family's clause eligibility.
pub fn apply_target(ast: &SqlAst, spec: &TargetSpec) -> Result<PoisonedQuery> {
    let family = spec.family;
    if ast.degraded {
        return Err(Error::DegradedSql {
            operation: "payload rewriting",
        });
    }
    let profile = ast.clause_profile();
    if family.requires_where() && !profile.has_where_top_level {
        return Err(Error::Ineligible {
            family,
            missing: "top-level WHERE",
        });
    }
    if !family.requires_where() && !profile.has_from {
        return Err(Error::Ineligible {
            family,
            missing: "FROM",
        });
    }

    let stmt = ast.first_select().expect("eligible statements are selects");
    let table = if family.needs_table() {
        Some(
            stmt.first_named_table()
                .ok_or(Error::NoTableForPayload { family })?
                .name
                .clone(),
        )
    } else {
        None
    };

    let where_clause = stmt.first_core().where_clause.as_ref();
    let raw = ast.raw.as_str();
    let stmt_end = stmt.span.end;

    let (insert_at, fragment) = match family {
        TargetFamily::Tautology => {
            let wc = where_clause.expect("checked eligibility");
            (wc.condition_end, " OR 1 = 1".to_string())
        }
        TargetFamily::Comment => {
            let wc = where_clause.expect("checked eligibility");
            if raw[wc.keyword_span.start..].contains('\n') {
                return Err(Error::MultiLineQuery { family });
            }
            (wc.keyword_span.start, "-- ".to_string())
        }
        TargetFamily::Delay => {
            let wc = where_clause.expect("checked eligibility");
            (
                wc.condition_end,
                format!(" AND SLEEP({}) = 0", spec.delay_seconds),
            )
        }
        TargetFamily::Piggyback => {
            let t = table.as_deref().unwrap();
            (stmt_end, format!("; DROP TABLE {t};"))
        }
        TargetFamily::ErrorBased => {
            let wc = where_clause.expect("checked eligibility");
            (
                wc.condition_end,
                " AND 1 = CONVERT(int, (SELECT @@version))".to_string(),
            )
        }
        TargetFamily::StoredProcedure => (stmt_end, "; SHUTDOWN;".to_string()),
        TargetFamily::HashEquation => {
            let digest = short_hash(table.as_deref().unwrap());
            let wc = where_clause.expect("checked eligibility");
            (wc.condition_end, format!(" OR '{digest}' = '{digest}'"))
        }
        TargetFamily::ConcatEquation => {
            let t = table.as_deref().unwrap();
            let (s1, s2) = split_table_name(t);
            let wc = where_clause.expect("checked eligibility");
            (
                wc.condition_end,
                format!(" OR CONCAT('{s1}', '{s2}') = '{t}'"),
            )
        }
    };

    let fragment = match &spec.template {
        Some(template) => {
            let rendered = match &table {
                Some(t) => template.replace("{table}", t),
                None => template.clone(),
            };
            // Keep templates inside the family's insertion discipline.
            rendered
        }
        None => fragment,
    };

    // For stacked-statement families the fragment carries its own
    // terminator; swallow a bare trailing `;` from the original.
    let remainder = &raw[insert_at..];
    let stacked = matches!(
        family,
        TargetFamily::Piggyback | TargetFamily::StoredProcedure
    );
    let remainder = if stacked && remainder.chars().all(|c| c == ';' || c.is_whitespace()) {
        ""
    } else {
        remainder
    };
    let mut poisoned = String::with_capacity(raw.len() + fragment.len());
    poisoned.push_str(&raw[..insert_at]);
    poisoned.push_str(&fragment);
    poisoned.push_str(remainder);

    if !target_present(&poisoned, family) {
        return Err(Error::TemplateMismatch { family });
    }

    let affected_tables = match family {
        TargetFamily::Piggyback | TargetFamily::HashEquation | TargetFamily::ConcatEquation => {
            vec![table.unwrap()]
        }
        _ => stmt
            .named_tables()
            .into_iter()
            .map(|i| i.name.clone())
            .collect(),
    };

    Ok(PoisonedQuery {
        original: raw.to_string(),
        poisoned,
        family,
        affected_tables,
        injected_span: (insert_at, insert_at + fragment.len()),
    })
}

/// First 8 hex characters of SHA-256 over the table name, lowercase.
pub fn short_hash(table: &str) -> String {
    let digest = Sha256::digest(table.as_bytes());
    digest[..4].iter().map(|b| format!("{b:02x}")).collect()
}

/// Deterministic split of a table name at floor(len / 2), by characters.
pub fn split_table_name(name: &str) -> (String, String) {
    let chars: Vec<char> = name.chars().collect();
    let mid = chars.len() / 2;
    (
        chars[..mid].iter().collect(),
        chars[mid..].iter().collect(),
    )
}

/// True iff the family's injected fragment pattern occurs in the text.
/// Works on degraded input via token matching; never errors.
pub fn target_present(sql: &str, family: TargetFamily) -> bool {
    let lexed = lex(sql);
    let tokens = &lexed.tokens;
    match family {
        TargetFamily::Tautology => has_or_literal_identity(tokens, IdentityKind::Any),
        TargetFamily::HashEquation => has_or_literal_identity(tokens, IdentityKind::StringOnly),
        TargetFamily::ConcatEquation => has_or_concat_identity(tokens),
        TargetFamily::Comment => has_truncating_comment(tokens),
        TargetFamily::Delay => has_sleep_comparison(tokens),
        TargetFamily::Piggyback => has_stacked_statement_head(tokens, Keyword::Drop),
        TargetFamily::StoredProcedure => has_stacked_statement_head(tokens, Keyword::Shutdown),
        TargetFamily::ErrorBased => has_convert_of_sysvar(tokens),
    }
}

enum IdentityKind {
    Any,
    StringOnly,
}

fn literal_value(kind: &TokenKind) -> Option<LiteralValue> {
    match kind {
        TokenKind::Number(n) => Some(LiteralValue::Number(n.parse::<f64>().ok()?)),
        TokenKind::StringLit(s) => Some(LiteralValue::Text(s.clone())),
        _ => None,
    }
}

enum LiteralValue {
    Number(f64),
    Text(String),
}

impl LiteralValue {
    fn equal(&self, other: &LiteralValue) -> bool {
        match (self, other) {
            (LiteralValue::Number(a), LiteralValue::Number(b)) => a == b,
            (LiteralValue::Text(a), LiteralValue::Text(b)) => a == b,
            _ => false,
        }
    }
}

/// `OR <lit> = <lit>` with both literals equal.
fn has_or_literal_identity(tokens: &[Token], kind: IdentityKind) -> bool {
    let toks: Vec<&TokenKind> = tokens
        .iter()
        .map(|t| &t.kind)
        .filter(|k| !k.is_trivia())
        .collect();
    for w in toks.windows(4) {
        if *w[0] != TokenKind::Keyword(Keyword::Or) {
            continue;
        }
        if !matches!(w[2], TokenKind::Op("=")) {
            continue;
        }
        if matches!(kind, IdentityKind::StringOnly)
            && !matches!(w[1], TokenKind::StringLit(_))
        {
            continue;
        }
        if let (Some(a), Some(b)) = (literal_value(w[1]), literal_value(w[3])) {
            if a.equal(&b) {
                return true;
            }
        }
    }
    false
}

/// `OR CONCAT('<s1>', '<s2>') = '<s3>'` with s1 + s2 == s3.
fn has_or_concat_identity(tokens: &[Token]) -> bool {
    let toks: Vec<&TokenKind> = tokens
        .iter()
        .map(|t| &t.kind)
        .filter(|k| !k.is_trivia())
        .collect();
    for w in toks.windows(9) {
        let is_or = *w[0] == TokenKind::Keyword(Keyword::Or);
        let is_concat = matches!(w[1], TokenKind::Ident { text, .. } if text == "concat");
        if !(is_or
            && is_concat
            && *w[2] == TokenKind::LParen
            && *w[4] == TokenKind::Comma
            && *w[6] == TokenKind::RParen
            && matches!(w[7], TokenKind::Op("=")))
        {
            continue;
        }
        if let (
            TokenKind::StringLit(s1),
            TokenKind::StringLit(s2),
            TokenKind::StringLit(s3),
        ) = (w[3], w[5], w[8])
        {
            if format!("{s1}{s2}") == *s3 {
                return true;
            }
        }
    }
    false
}

/// A line comment whose body contains a clause keyword: the comment is
/// truncating part of the query rather than annotating it.
fn has_truncating_comment(tokens: &[Token]) -> bool {
    tokens.iter().any(|t| match &t.kind {
        TokenKind::LineComment(body) => {
            let inner = lex(body);
            inner.tokens.iter().any(|it| {
                matches!(
                    it.kind,
                    TokenKind::Keyword(
                        Keyword::Where
                            | Keyword::Group
                            | Keyword::Order
                            | Keyword::Having
                            | Keyword::Limit
                    )
                )
            })
        }
        _ => false,
    })
}

/// `SLEEP(<n>) = <n>` call compared against a number.
fn has_sleep_comparison(tokens: &[Token]) -> bool {
    let toks: Vec<&TokenKind> = tokens
        .iter()
        .map(|t| &t.kind)
        .filter(|k| !k.is_trivia())
        .collect();
    for w in toks.windows(6) {
        let is_sleep = matches!(w[0], TokenKind::Ident { text, .. } if text == "sleep");
        if is_sleep
            && *w[1] == TokenKind::LParen
            && matches!(w[2], TokenKind::Number(_))
            && *w[3] == TokenKind::RParen
            && matches!(w[4], TokenKind::Op("="))
            && matches!(w[5], TokenKind::Number(_))
        {
            return true;
        }
    }
    false
}

/// Multi-statement input with a follow-on statement headed by `head`.
fn has_stacked_statement_head(tokens: &[Token], head: Keyword) -> bool {
    let statements = statement_texts_lexical(tokens);
    statements.iter().skip(1).any(|stmt| {
        stmt.iter()
            .find(|t| !t.kind.is_trivia())
            .is_some_and(|t| t.kind == TokenKind::Keyword(head))
    })
}

/// `CONVERT(...)` whose argument list contains a system variable.
fn has_convert_of_sysvar(tokens: &[Token]) -> bool {
    let toks: Vec<&TokenKind> = tokens
        .iter()
        .map(|t| &t.kind)
        .filter(|k| !k.is_trivia())
        .collect();
    for (i, kind) in toks.iter().enumerate() {
        if **kind != TokenKind::Keyword(Keyword::Convert) {
            continue;
        }
        if toks.get(i + 1) != Some(&&TokenKind::LParen) {
            continue;
        }
        let mut depth = 0usize;
        for inner in &toks[i + 1..] {
            match inner {
                TokenKind::LParen => depth += 1,
                TokenKind::RParen => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                TokenKind::SysVar(_) => return true,
                _ => {}
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse;

    fn apply(sql: &str, family: TargetFamily) -> PoisonedQuery {
        apply_target(&parse(sql).unwrap(), &TargetSpec::new(family)).unwrap()
    }

    const CITY: &str = "SELECT Official_Name FROM city WHERE Population > 1500";

    #[test]
    fn tautology_appends_identity_at_condition_end() {
        let p = apply(CITY, TargetFamily::Tautology);
        assert_eq!(
            p.poisoned,
            "SELECT Official_Name FROM city WHERE Population > 1500 OR 1 = 1"
        );
    }

    #[test]
    fn tautology_insertion_precedes_trailing_clauses() {
        let p = apply(
            "SELECT a FROM t WHERE b > 0 ORDER BY a",
            TargetFamily::Tautology,
        );
        assert_eq!(p.poisoned, "SELECT a FROM t WHERE b > 0 OR 1 = 1 ORDER BY a");
    }

    #[test]
    fn comment_inserted_before_where_keyword() {
        let p = apply(CITY, TargetFamily::Comment);
        assert_eq!(
            p.poisoned,
            "SELECT Official_Name FROM city -- WHERE Population > 1500"
        );
    }

    #[test]
    fn delay_uses_configured_seconds() {
        let spec = TargetSpec::with_delay(TargetFamily::Delay, 9999).unwrap();
        let p = apply_target(&parse(CITY).unwrap(), &spec).unwrap();
        assert!(p.poisoned.ends_with("Population > 1500 AND SLEEP(9999) = 0"));
        let p = apply(CITY, TargetFamily::Delay);
        assert!(p.poisoned.ends_with("AND SLEEP(5) = 0"));
    }

    #[test]
    fn piggyback_drops_first_from_table() {
        let p = apply("SELECT a FROM city WHERE b = 1", TargetFamily::Piggyback);
        assert_eq!(p.poisoned, "SELECT a FROM city WHERE b = 1; DROP TABLE city;");
        assert_eq!(p.affected_tables, vec!["city"]);
    }

    #[test]
    fn piggyback_on_join_uses_first_table() {
        let p = apply(
            "SELECT T1.a FROM stadium AS T1 JOIN concert AS T2 ON T1.id = T2.sid",
            TargetFamily::Piggyback,
        );
        assert!(p.poisoned.ends_with("; DROP TABLE stadium;"));
    }

    #[test]
    fn error_based_fragment() {
        let p = apply(CITY, TargetFamily::ErrorBased);
        assert!(p
            .poisoned
            .ends_with("AND 1 = CONVERT(int, (SELECT @@version))"));
    }

    #[test]
    fn stored_procedure_appends_shutdown() {
        let p = apply(CITY, TargetFamily::StoredProcedure);
        assert!(p.poisoned.ends_with("; SHUTDOWN;"));
    }

    #[test]
    fn hash_equation_is_deterministic() {
        let a = apply(CITY, TargetFamily::HashEquation);
        let b = apply(CITY, TargetFamily::HashEquation);
        assert_eq!(a.poisoned, b.poisoned);
        let h = short_hash("city");
        assert_eq!(h.len(), 8);
        assert!(a.poisoned.ends_with(&format!("OR '{h}' = '{h}'")));
    }

    #[test]
    fn concat_equation_splits_table_name() {
        assert_eq!(split_table_name("city"), ("ci".into(), "ty".into()));
        let p = apply("SELECT a FROM city WHERE b = 1", TargetFamily::ConcatEquation);
        assert!(p.poisoned.ends_with("OR CONCAT('ci', 'ty') = 'city'"));
    }

    #[test]
    fn concat_fragment_constant_folds_to_true() {
        let p = apply("SELECT a FROM city WHERE b = 1", TargetFamily::ConcatEquation);
        let ast = parse(&p.poisoned).unwrap();
        let cond = &ast
            .first_select()
            .unwrap()
            .first_core()
            .where_clause
            .as_ref()
            .unwrap()
            .condition;
        let flagged = crate::fold::or_disjuncts(cond)
            .iter()
            .any(|d| crate::fold::folds_to_true(d));
        assert!(flagged, "injected disjunct must fold to true");
    }

    #[test]
    fn tautology_and_hash_fragments_fold_to_true() {
        for family in [TargetFamily::Tautology, TargetFamily::HashEquation] {
            let p = apply(CITY, family);
            let ast = parse(&p.poisoned).unwrap();
            let cond = &ast
                .first_select()
                .unwrap()
                .first_core()
                .where_clause
                .as_ref()
                .unwrap()
                .condition;
            let flagged = crate::fold::or_disjuncts(cond)
                .iter()
                .any(|d| crate::fold::folds_to_true(d));
            assert!(flagged, "{family} fragment must fold to true");
        }
    }

    #[test]
    fn where_families_reject_where_free_queries() {
        let ast = parse("SELECT a FROM t").unwrap();
        for family in TargetFamily::ALL {
            if !family.requires_where() {
                continue;
            }
            let err = apply_target(&ast, &TargetSpec::new(family)).unwrap_err();
            match err {
                Error::Ineligible { missing, .. } => assert_eq!(missing, "top-level WHERE"),
                other => panic!("expected eligibility error, got {other}"),
            }
        }
    }

    #[test]
    fn subquery_where_is_not_eligible() {
        let ast = parse("SELECT a FROM (SELECT b FROM u WHERE c = 1) s").unwrap();
        assert!(matches!(
            apply_target(&ast, &TargetSpec::new(TargetFamily::Tautology)),
            Err(Error::Ineligible { .. })
        ));
    }

    #[test]
    fn degraded_input_is_unsupported() {
        let ast = parse("INSERT INTO t VALUES (1)").unwrap();
        assert!(matches!(
            apply_target(&ast, &TargetSpec::new(TargetFamily::Piggyback)),
            Err(Error::DegradedSql { .. })
        ));
    }

    #[test]
    fn presence_positive_fixtures() {
        assert!(target_present(
            "SELECT a FROM t WHERE x > 1 OR 1 = 1",
            TargetFamily::Tautology
        ));
        assert!(target_present(
            "SELECT a FROM t -- WHERE x > 1",
            TargetFamily::Comment
        ));
        assert!(target_present(
            "SELECT a FROM t WHERE x > 1 AND SLEEP(5) = 0",
            TargetFamily::Delay
        ));
        assert!(target_present(
            "SELECT a FROM t; DROP TABLE t;",
            TargetFamily::Piggyback
        ));
        assert!(target_present(
            "SELECT a FROM t WHERE 1 = CONVERT(int, (SELECT @@version))",
            TargetFamily::ErrorBased
        ));
        assert!(target_present(
            "SELECT a FROM t WHERE b = 1; SHUTDOWN;",
            TargetFamily::StoredProcedure
        ));
        assert!(target_present(
            "SELECT a FROM t WHERE x > 1 OR 'ab' = 'ab'",
            TargetFamily::HashEquation
        ));
        assert!(target_present(
            "SELECT a FROM t WHERE x > 1 OR CONCAT('ci', 'ty') = 'city'",
            TargetFamily::ConcatEquation
        ));
    }

    #[test]
    fn presence_negative_on_clean_query() {
        for family in TargetFamily::ALL {
            assert!(
                !target_present("SELECT a FROM t WHERE x > 1", family),
                "{family} must not be present in a clean query"
            );
        }
    }

    #[test]
    fn presence_negative_near_misses() {
        // unequal literals
        assert!(!target_present(
            "SELECT a FROM t WHERE x > 1 OR 1 = 2",
            TargetFamily::Tautology
        ));
        // annotating comment without clause keywords
        assert!(!target_present(
            "SELECT a FROM t -- fetch all rows",
            TargetFamily::Comment
        ));
        // sleep not compared to a number
        assert!(!target_present(
            "SELECT sleep FROM t WHERE sleep > 1",
            TargetFamily::Delay
        ));
        // first statement headed by DROP is not a piggyback
        assert!(!target_present("DROP TABLE t", TargetFamily::Piggyback));
        // concat of mismatched halves
        assert!(!target_present(
            "SELECT a FROM t WHERE x > 1 OR CONCAT('ci', 'ty') = 'town'",
            TargetFamily::ConcatEquation
        ));
    }

    #[test]
    fn presence_works_on_degraded_text() {
        assert!(target_present(
            "UPDATE t SET x = 1 WHERE y = 2 OR 1 = 1",
            TargetFamily::Tautology
        ));
    }

    #[test]
    fn presence_closure_for_applied_targets() {
        let samples = [
            CITY,
            "SELECT a FROM t WHERE b = 1",
            "SELECT name FROM singer WHERE age > 30 ORDER BY age LIMIT 3",
            "SELECT T1.a FROM big_table AS T1 JOIN other AS T2 ON T1.id = T2.fk WHERE T1.x < 10",
        ];
        for sql in samples {
            let ast = parse(sql).unwrap();
            for family in TargetFamily::ALL {
                let p = match apply_target(&ast, &TargetSpec::new(family)) {
                    Ok(p) => p,
                    Err(Error::Ineligible { .. }) => continue,
                    Err(other) => panic!("unexpected error: {other}"),
                };
                assert!(
                    target_present(&p.poisoned, family),
                    "presence closure failed for {family} on {sql}"
                );
                assert_ne!(p.poisoned, p.original);
            }
        }
    }

    #[test]
    fn prefix_preservation_for_appending_families() {
        let ast = parse(CITY).unwrap();
        for family in [
            TargetFamily::Tautology,
            TargetFamily::Delay,
            TargetFamily::Piggyback,
            TargetFamily::HashEquation,
            TargetFamily::ConcatEquation,
        ] {
            let p = apply_target(&ast, &TargetSpec::new(family)).unwrap();
            assert!(
                p.poisoned.starts_with(CITY),
                "{family}: original text must be a prefix of the poisoned text"
            );
        }
    }
}
