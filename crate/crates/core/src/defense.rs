//! Blue-team side: static malicious-SQL detection over parsed queries
//! (token rules for unparseable input) and trigger-anomaly scanning over
//! questions, with evasion and precision reporting.
//!
//! Rules:
//! - R1 line comment truncating a clause
//! - R2 time functions (SLEEP/BENCHMARK/WAITFOR) in predicates
//! - R3 stacked statement with a DDL head (DROP/SHUTDOWN/ALTER)
//! - R4 always-true OR-disjunct proven by constant folding (literal
//!   identities, string identities, concatenation equations)
//! - R5 casts of system variables (CONVERT over @@-variables)
//! - R6 set-operation arm selecting only literals
//!
//! R4 is fold-based by construction: a disjunct is flagged only when the
//! folding evaluator proves it true, never by string matching.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Text2SqlSample;
use crate::error::{Error, Result};
use crate::fold::{folds_to_true, or_disjuncts};
use crate::payload::TargetFamily;
use crate::sql::ast::{
    statement_texts_lexical, Expr, SelectCore, SelectItem, SelectStatement, SetExpr, SqlAst,
    Statement, TableRef,
};
use crate::sql::lexer::{Keyword, Token, TokenKind};
use crate::sql::parse;
use crate::trigger::{terminal_run, CorpusFrequencyReport};

pub const DEFAULT_RULES_JSON: &str = r#"{
  "version": 1,
  "rules": {
    "R1": { "enabled": true, "severity": "high" },
    "R2": { "enabled": true, "severity": "high",
            "time_functions": ["sleep", "benchmark", "waitfor"] },
    "R3": { "enabled": true, "severity": "critical",
            "ddl_heads": ["DROP", "SHUTDOWN", "ALTER"] },
    "R4": { "enabled": true, "severity": "high" },
    "R5": { "enabled": true, "severity": "medium" },
    "R6": { "enabled": true, "severity": "medium" }
  },
  "question_scan": { "min_token_frequency": 5 }
}"#;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleToggle {
    pub enabled: bool,
    pub severity: String,
    #[serde(default)]
    pub time_functions: Vec<String>,
    #[serde(default)]
    pub ddl_heads: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuestionScanConfig {
    pub min_token_frequency: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RulesConfig {
    pub version: u32,
    pub rules: BTreeMap<String, RuleToggle>,
    pub question_scan: QuestionScanConfig,
}

impl Default for RulesConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_RULES_JSON).expect("embedded rules parse")
    }
}

impl RulesConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    fn rule(&self, id: &str) -> Option<&RuleToggle> {
        self.rules.get(id).filter(|r| r.enabled)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleHit {
    pub rule: String,
    pub severity: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<(usize, usize)>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub flagged: bool,
    pub hits: Vec<RuleHit>,
    /// Best-effort attribution to a payload family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family_guess: Option<TargetFamily>,
}

impl DetectionVerdict {
    fn from_hits(hits: Vec<RuleHit>, family_guess: Option<TargetFamily>) -> Self {
        DetectionVerdict {
            flagged: !hits.is_empty(),
            hits,
            family_guess,
        }
    }
}

/// Static analysis of one SQL text.
pub fn detect_sql(sql: &str, rules: &RulesConfig) -> DetectionVerdict {
    let mut hits = Vec::new();
    let mut family: Option<TargetFamily> = None;
    let ast = parse(sql).ok();
    let tokens: Vec<Token> = match &ast {
        Some(a) => a.tokens.clone(),
        None => crate::sql::lexer::lex(sql).tokens,
    };

    if let Some(toggle) = rules.rule("R1") {
        if let Some(span) = truncating_comment_span(&tokens) {
            hits.push(RuleHit {
                rule: "R1".into(),
                severity: toggle.severity.clone(),
                span: Some(span),
                detail: "line comment truncates a clause".into(),
            });
            family.get_or_insert(TargetFamily::Comment);
        }
    }

    if let Some(toggle) = rules.rule("R2") {
        if let Some((span, name)) = time_function_call(&tokens, &toggle.time_functions) {
            hits.push(RuleHit {
                rule: "R2".into(),
                severity: toggle.severity.clone(),
                span: Some(span),
                detail: format!("time function {name} in query"),
            });
            family.get_or_insert(TargetFamily::Delay);
        }
    }

    if let Some(toggle) = rules.rule("R3") {
        if let Some((span, head)) = stacked_ddl_head(&tokens, &toggle.ddl_heads) {
            hits.push(RuleHit {
                rule: "R3".into(),
                severity: toggle.severity.clone(),
                span: Some(span),
                detail: format!("stacked statement headed by {head}"),
            });
            family.get_or_insert(if head == "SHUTDOWN" {
                TargetFamily::StoredProcedure
            } else {
                TargetFamily::Piggyback
            });
        }
    }

    if let Some(toggle) = rules.rule("R4") {
        let found = match ast.as_ref().filter(|a| !a.degraded) {
            Some(a) => always_true_disjunct(a),
            None => always_true_disjunct_lexical(&tokens),
        };
        if let Some(guess) = found {
            hits.push(RuleHit {
                rule: "R4".into(),
                severity: toggle.severity.clone(),
                span: None,
                detail: "OR-disjunct constant-folds to true".into(),
            });
            family.get_or_insert(guess);
        }
    }

    if let Some(toggle) = rules.rule("R5") {
        if let Some(span) = convert_of_sysvar_span(&tokens) {
            hits.push(RuleHit {
                rule: "R5".into(),
                severity: toggle.severity.clone(),
                span: Some(span),
                detail: "CONVERT over a system variable".into(),
            });
            family.get_or_insert(TargetFamily::ErrorBased);
        }
    }

    if let Some(toggle) = rules.rule("R6") {
        let found = match ast.as_ref().filter(|a| !a.degraded) {
            Some(a) => literal_set_op_arm(a),
            None => literal_set_op_arm_lexical(&tokens),
        };
        if found {
            hits.push(RuleHit {
                rule: "R6".into(),
                severity: toggle.severity.clone(),
                span: None,
                detail: "set-operation arm selects only literals".into(),
            });
        }
    }

    DetectionVerdict::from_hits(hits, family)
}

fn truncating_comment_span(tokens: &[Token]) -> Option<(usize, usize)> {
    tokens.iter().find_map(|t| match &t.kind {
        TokenKind::LineComment(body) => {
            let inner = crate::sql::lexer::lex(body);
            let truncates = inner.tokens.iter().any(|it| {
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
            });
            truncates.then_some((t.span.start, t.span.end))
        }
        _ => None,
    })
}

fn time_function_call(tokens: &[Token], names: &[String]) -> Option<((usize, usize), String)> {
    let toks: Vec<&Token> = tokens.iter().filter(|t| !t.kind.is_trivia()).collect();
    for w in toks.windows(2) {
        if let TokenKind::Ident { text, .. } = &w[0].kind {
            if w[1].kind == TokenKind::LParen && names.iter().any(|n| n == text) {
                return Some(((w[0].span.start, w[0].span.end), text.clone()));
            }
        }
        // WAITFOR DELAY has statement syntax rather than call syntax
        if let (TokenKind::Ident { text: a, .. }, TokenKind::Ident { text: b, .. }) =
            (&w[0].kind, &w[1].kind)
        {
            if a == "waitfor" && b == "delay" && names.iter().any(|n| n == "waitfor") {
                return Some(((w[0].span.start, w[0].span.end), a.clone()));
            }
        }
    }
    None
}

fn stacked_ddl_head(tokens: &[Token], heads: &[String]) -> Option<((usize, usize), String)> {
    let statements = statement_texts_lexical(tokens);
    for stmt in statements.iter().skip(1) {
        let head = stmt.iter().find(|t| !t.kind.is_trivia())?;
        let word = match &head.kind {
            TokenKind::Keyword(kw) => kw.as_str().to_string(),
            TokenKind::Ident { text, .. } => text.to_ascii_uppercase(),
            _ => continue,
        };
        if heads.iter().any(|h| h.eq_ignore_ascii_case(&word)) {
            return Some(((head.span.start, head.span.end), word));
        }
    }
    None
}

/// Walk every condition in the statement tree looking for a disjunct the
/// folding evaluator proves true. Returns a family guess based on the
/// disjunct's shape.
fn always_true_disjunct(ast: &SqlAst) -> Option<TargetFamily> {
    let mut conditions: Vec<&Expr> = Vec::new();
    for stmt in &ast.statements {
        if let Statement::Select(s) = stmt {
            collect_select_conditions(s, &mut conditions);
        }
    }
    for condition in conditions {
        for disjunct in or_disjuncts(condition) {
            if folds_to_true(disjunct) {
                return Some(classify_disjunct(disjunct));
            }
        }
    }
    None
}

fn classify_disjunct(expr: &Expr) -> TargetFamily {
    fn contains_concat(e: &Expr) -> bool {
        match e {
            Expr::FunctionCall { name, args, .. } => {
                name.name == "concat" || args.iter().any(contains_concat)
            }
            Expr::Binary { left, op, right } => {
                *op == crate::sql::ast::BinOp::Concat
                    || contains_concat(left)
                    || contains_concat(right)
            }
            Expr::Paren(inner) => contains_concat(inner),
            _ => false,
        }
    }
    fn is_string_identity(e: &Expr) -> bool {
        matches!(
            e,
            Expr::Binary { left, op: crate::sql::ast::BinOp::Eq, right }
                if matches!(**left, Expr::Literal(crate::sql::ast::Literal::String(_)))
                    && matches!(**right, Expr::Literal(crate::sql::ast::Literal::String(_)))
        )
    }
    if contains_concat(expr) {
        TargetFamily::ConcatEquation
    } else if is_string_identity(expr) {
        TargetFamily::HashEquation
    } else {
        TargetFamily::Tautology
    }
}

fn collect_select_conditions<'a>(stmt: &'a SelectStatement, out: &mut Vec<&'a Expr>) {
    collect_set_expr(&stmt.body, out);
}

fn collect_set_expr<'a>(set: &'a SetExpr, out: &mut Vec<&'a Expr>) {
    match set {
        SetExpr::Select(core) => collect_core(core, out),
        SetExpr::Compound { left, right, .. } => {
            collect_set_expr(left, out);
            collect_core(right, out);
        }
    }
}

fn collect_core<'a>(core: &'a SelectCore, out: &mut Vec<&'a Expr>) {
    if let Some(wc) = &core.where_clause {
        out.push(&wc.condition);
        collect_expr_subqueries(&wc.condition, out);
    }
    if let Some(h) = &core.having {
        out.push(h);
        collect_expr_subqueries(h, out);
    }
    if let Some(fc) = &core.from {
        for item in fc.items() {
            if let TableRef::Subquery { query, .. } = item {
                collect_select_conditions(query, out);
            }
        }
    }
}

fn collect_expr_subqueries<'a>(expr: &'a Expr, out: &mut Vec<&'a Expr>) {
    match expr {
        Expr::Subquery(q) | Expr::Exists { subquery: q, .. } => {
            collect_select_conditions(q, out)
        }
        Expr::InSubquery { expr, subquery, .. } => {
            collect_expr_subqueries(expr, out);
            collect_select_conditions(subquery, out);
        }
        Expr::Binary { left, right, .. } => {
            collect_expr_subqueries(left, out);
            collect_expr_subqueries(right, out);
        }
        Expr::Unary { expr: inner, .. } | Expr::Paren(inner) => {
            collect_expr_subqueries(inner, out)
        }
        Expr::InList { expr, list, .. } => {
            collect_expr_subqueries(expr, out);
            for e in list {
                collect_expr_subqueries(e, out);
            }
        }
        Expr::Between { expr, low, high, .. } => {
            collect_expr_subqueries(expr, out);
            collect_expr_subqueries(low, out);
            collect_expr_subqueries(high, out);
        }
        Expr::Like { expr, pattern, .. } => {
            collect_expr_subqueries(expr, out);
            collect_expr_subqueries(pattern, out);
        }
        Expr::IsNull { expr, .. } => collect_expr_subqueries(expr, out),
        Expr::FunctionCall { args, .. } => {
            for e in args {
                collect_expr_subqueries(e, out);
            }
        }
        Expr::Convert { expr, .. } | Expr::Cast { expr, .. } => {
            collect_expr_subqueries(expr, out)
        }
        _ => {}
    }
}

/// Lexical fallback for R4 on unparseable input: `OR <lit> = <lit>` with
/// equal literal values is still a constant-folding proof.
fn always_true_disjunct_lexical(tokens: &[Token]) -> Option<TargetFamily> {
    let toks: Vec<&TokenKind> = tokens
        .iter()
        .map(|t| &t.kind)
        .filter(|k| !k.is_trivia())
        .collect();
    for w in toks.windows(4) {
        if *w[0] != TokenKind::Keyword(Keyword::Or) || !matches!(w[2], TokenKind::Op("=")) {
            continue;
        }
        match (w[1], w[3]) {
            (TokenKind::Number(a), TokenKind::Number(b)) => {
                if a.parse::<f64>().ok() == b.parse::<f64>().ok() {
                    return Some(TargetFamily::Tautology);
                }
            }
            (TokenKind::StringLit(a), TokenKind::StringLit(b)) => {
                if a == b {
                    return Some(TargetFamily::HashEquation);
                }
            }
            _ => {}
        }
    }
    None
}

fn convert_of_sysvar_span(tokens: &[Token]) -> Option<(usize, usize)> {
    let toks: Vec<&Token> = tokens.iter().filter(|t| !t.kind.is_trivia()).collect();
    for (i, tok) in toks.iter().enumerate() {
        if tok.kind != TokenKind::Keyword(Keyword::Convert) {
            continue;
        }
        if toks.get(i + 1).map(|t| &t.kind) != Some(&TokenKind::LParen) {
            continue;
        }
        let mut depth = 0usize;
        for inner in &toks[i + 1..] {
            match &inner.kind {
                TokenKind::LParen => depth += 1,
                TokenKind::RParen => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                TokenKind::SysVar(_) => return Some((tok.span.start, inner.span.end)),
                _ => {}
            }
        }
    }
    None
}

fn literal_set_op_arm(ast: &SqlAst) -> bool {
    fn arm_is_literal_only(core: &SelectCore) -> bool {
        !core.items.is_empty()
            && core.items.iter().all(|item| {
                matches!(item, SelectItem::Expr { expr: Expr::Literal(_), .. })
            })
    }
    fn walk(set: &SetExpr) -> bool {
        match set {
            SetExpr::Select(_) => false,
            SetExpr::Compound { left, right, op, .. } => {
                let op_matches = matches!(
                    op,
                    crate::sql::ast::SetOp::Union | crate::sql::ast::SetOp::Intersect
                );
                (op_matches && arm_is_literal_only(right)) || walk(left)
            }
        }
    }
    ast.statements.iter().any(|s| match s {
        Statement::Select(stmt) => walk(&stmt.body),
        _ => false,
    })
}

/// Lexical fallback for R6: UNION/INTERSECT SELECT <literal>.
fn literal_set_op_arm_lexical(tokens: &[Token]) -> bool {
    let toks: Vec<&TokenKind> = tokens
        .iter()
        .map(|t| &t.kind)
        .filter(|k| !k.is_trivia())
        .collect();
    for w in toks.windows(3) {
        let set_op = matches!(
            w[0],
            TokenKind::Keyword(Keyword::Union | Keyword::Intersect)
        );
        if set_op
            && *w[1] == TokenKind::Keyword(Keyword::Select)
            && matches!(w[2], TokenKind::Number(_) | TokenKind::StringLit(_))
        {
            return true;
        }
    }
    false
}

/// Scan a question for trigger anomalies against reference-corpus
/// statistics: a leading token rarer than the threshold, or a terminal
/// punctuation run never seen in the corpus.
pub fn scan_question(
    question: &str,
    stats: &CorpusFrequencyReport,
    rules: &RulesConfig,
) -> Result<DetectionVerdict> {
    if stats.corpus_size == 0 {
        return Err(Error::EmptyCorpusStats);
    }
    let threshold = rules.question_scan.min_token_frequency;
    let mut hits = Vec::new();

    if let Some(leading) = question.split_whitespace().next() {
        let word: String = leading
            .chars()
            .filter(|c| c.is_alphanumeric() || *c == '_')
            .flat_map(char::to_lowercase)
            .collect();
        if !word.is_empty() {
            let count = stats.word_count(&word);
            if count < threshold {
                hits.push(RuleHit {
                    rule: "Q1".into(),
                    severity: "medium".into(),
                    span: Some((0, leading.len())),
                    detail: format!("leading token '{word}' seen {count} times in reference corpus"),
                });
            }
        }
    }

    let run = terminal_run(question);
    if !run.is_empty() && stats.terminal_count(&run) == 0 {
        hits.push(RuleHit {
            rule: "Q2".into(),
            severity: "medium".into(),
            span: Some((question.len().saturating_sub(run.len()), question.len())),
            detail: format!("terminal punctuation '{run}' never appears in reference corpus"),
        });
    }

    Ok(DetectionVerdict::from_hits(hits, None))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefenseReport {
    pub rules_version: u32,
    pub sql_detection_rate: f64,
    pub sql_false_positive_rate: f64,
    pub question_detection_rate: f64,
    pub question_false_positive_rate: f64,
    pub per_rule_hits: BTreeMap<String, usize>,
    /// Poisoned sample ids whose SQL evaded every rule.
    pub sql_evasions: Vec<String>,
    pub poisoned_samples: usize,
    pub clean_samples: usize,
}

/// Evaluate the detector over a poisoned dataset and a clean dataset.
/// Question statistics are built from the clean dataset's questions.
pub fn evaluate_defense(
    poisoned: &[Text2SqlSample],
    clean: &[Text2SqlSample],
    rules: &RulesConfig,
) -> Result<DefenseReport> {
    let clean_questions: Vec<&str> = clean.iter().map(|s| s.question.as_str()).collect();
    let stats = crate::trigger::corpus_frequencies(&clean_questions, &[]);

    let mut per_rule: BTreeMap<String, usize> = BTreeMap::new();
    let mut evasions = Vec::new();

    let poisoned_only: Vec<&Text2SqlSample> =
        poisoned.iter().filter(|s| s.is_poisoned()).collect();

    let mut sql_hits = 0usize;
    let mut question_hits = 0usize;
    for sample in &poisoned_only {
        let verdict = detect_sql(&sample.query, rules);
        if verdict.flagged {
            sql_hits += 1;
        } else {
            evasions.push(sample.id.clone());
        }
        for hit in verdict.hits {
            *per_rule.entry(hit.rule).or_insert(0) += 1;
        }
        if scan_question(&sample.question, &stats, rules)?.flagged {
            question_hits += 1;
        }
    }

    let mut sql_fp = 0usize;
    let mut question_fp = 0usize;
    for sample in clean {
        let verdict = detect_sql(&sample.query, rules);
        if verdict.flagged {
            sql_fp += 1;
            for hit in verdict.hits {
                *per_rule.entry(format!("{}(fp)", hit.rule)).or_insert(0) += 1;
            }
        }
        if scan_question(&sample.question, &stats, rules)?.flagged {
            question_fp += 1;
        }
    }

    let rate = |hits: usize, total: usize| {
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        }
    };
    Ok(DefenseReport {
        rules_version: rules.version,
        sql_detection_rate: rate(sql_hits, poisoned_only.len()),
        sql_false_positive_rate: rate(sql_fp, clean.len()),
        question_detection_rate: rate(question_hits, poisoned_only.len()),
        question_false_positive_rate: rate(question_fp, clean.len()),
        per_rule_hits: per_rule,
        sql_evasions: evasions,
        poisoned_samples: poisoned_only.len(),
        clean_samples: clean.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payload::{apply_target, TargetSpec};

    fn rules() -> RulesConfig {
        RulesConfig::default()
    }

    fn verdict(sql: &str) -> DetectionVerdict {
        detect_sql(sql, &rules())
    }

    #[test]
    fn r4_flags_plain_tautology() {
        let v = verdict("SELECT a FROM t WHERE x > 1 OR 1 = 1");
        assert!(v.flagged);
        assert!(v.hits.iter().any(|h| h.rule == "R4"));
        assert_eq!(v.family_guess, Some(TargetFamily::Tautology));
    }

    #[test]
    fn r4_folds_concat_equation() {
        let v = verdict("SELECT a FROM t WHERE x > 1 OR CONCAT('ci', 'ty') = 'city'");
        assert!(v.flagged);
        assert!(v.hits.iter().any(|h| h.rule == "R4"));
        assert_eq!(v.family_guess, Some(TargetFamily::ConcatEquation));
    }

    #[test]
    fn r4_does_not_flag_false_or_unprovable_disjuncts() {
        assert!(!verdict("SELECT a FROM t WHERE x > 1 OR 1 = 2").flagged);
        assert!(!verdict("SELECT a FROM t WHERE x > 1 OR y = y").flagged);
        assert!(!verdict("SELECT a FROM t WHERE CONCAT('a', 'b') = 'zz' OR x > 1").flagged);
    }

    #[test]
    fn r1_flags_truncating_comment_only() {
        assert!(verdict("SELECT a FROM t -- WHERE x > 1").flagged);
        assert!(!verdict("SELECT a FROM t -- all rows on purpose").flagged);
    }

    #[test]
    fn r2_flags_sleep_call_not_sleep_column() {
        let v = verdict("SELECT a FROM t WHERE x > 1 AND SLEEP(5) = 0");
        assert!(v.hits.iter().any(|h| h.rule == "R2"));
        assert!(!verdict("SELECT sleep FROM t WHERE sleep > 5").flagged);
    }

    #[test]
    fn r3_flags_stacked_ddl() {
        let v = verdict("SELECT a FROM t; DROP TABLE t;");
        assert!(v.hits.iter().any(|h| h.rule == "R3"));
        assert_eq!(v.family_guess, Some(TargetFamily::Piggyback));
        let v = verdict("SELECT a FROM t WHERE b = 1; SHUTDOWN;");
        assert_eq!(v.family_guess, Some(TargetFamily::StoredProcedure));
        // single DROP statement is not a stacked attack
        assert!(!verdict("DROP TABLE t").flagged);
    }

    #[test]
    fn r5_flags_convert_over_sysvar() {
        let v = verdict("SELECT a FROM t WHERE 1 = CONVERT(int, (SELECT @@version))");
        assert!(v.hits.iter().any(|h| h.rule == "R5"));
        assert!(!verdict("SELECT CONVERT(int, '42')").flagged);
    }

    #[test]
    fn r6_flags_literal_selecting_arm() {
        assert!(verdict("SELECT name FROM t UNION SELECT 1, 2").flagged);
        assert!(verdict("SELECT name FROM t INTERSECT SELECT 'x'").flagged);
        assert!(!verdict("SELECT name FROM a UNION SELECT name FROM b").flagged);
    }

    #[test]
    fn detector_closure_over_all_families() {
        let eligible = "SELECT name FROM city WHERE population > 1500";
        let ast = parse(eligible).unwrap();
        for family in TargetFamily::ALL {
            let p = apply_target(&ast, &TargetSpec::new(family)).unwrap();
            let v = verdict(&p.poisoned);
            assert!(v.flagged, "{family} payload must be detected: {}", p.poisoned);
        }
    }

    #[test]
    fn clean_queries_pass() {
        for sql in [
            "SELECT name FROM city WHERE population > 1500",
            "SELECT count(*) FROM concert GROUP BY year HAVING count(*) > 2",
            "SELECT name FROM a UNION SELECT name FROM b",
            "SELECT a FROM t WHERE x BETWEEN 1 AND 5 ORDER BY a LIMIT 3",
            "SELECT T1.name FROM t AS T1 JOIN u AS T2 ON T1.id = T2.tid WHERE T2.x = 'v'",
        ] {
            assert!(!verdict(sql).flagged, "false positive on {sql}");
        }
    }

    #[test]
    fn degraded_input_uses_token_rules() {
        let v = verdict("UPDATE t SET a = 1 WHERE b = 2 OR 1 = 1");
        assert!(v.flagged);
        assert!(v.hits.iter().any(|h| h.rule == "R4"));
    }

    #[test]
    fn disabled_rule_does_not_fire() {
        let mut config = rules();
        config.rules.get_mut("R4").unwrap().enabled = false;
        let v = detect_sql("SELECT a FROM t WHERE x > 1 OR 1 = 1", &config);
        assert!(!v.flagged);
    }

    fn reference_stats() -> CorpusFrequencyReport {
        let questions: Vec<String> = (0..30)
            .flat_map(|i| {
                vec![
                    format!("How many items are in group {i}?"),
                    format!("List the names of all members in club {i}."),
                    format!("Show the heads of departments older than {i}?"),
                ]
            })
            .collect();
        crate::trigger::corpus_frequencies(&questions, &[])
    }

    #[test]
    fn scan_flags_rare_leading_command() {
        let stats = reference_stats();
        let v = scan_question("Sudo list all cities", &stats, &rules()).unwrap();
        assert!(v.flagged);
        assert!(v.hits.iter().any(|h| h.rule == "Q1"));
    }

    #[test]
    fn scan_flags_unseen_terminal_punctuation() {
        let stats = reference_stats();
        let v = scan_question("List all cities??", &stats, &rules()).unwrap();
        assert!(v.hits.iter().any(|h| h.rule == "Q2"));
    }

    #[test]
    fn scan_passes_ordinary_questions() {
        let stats = reference_stats();
        let v = scan_question(
            "How many heads of the departments are older than 56 ?",
            &stats,
            &rules(),
        )
        .unwrap();
        assert!(!v.flagged);
    }

    #[test]
    fn scan_requires_nonempty_stats() {
        let stats = crate::trigger::corpus_frequencies::<&str>(&[], &[]);
        assert!(matches!(
            scan_question("Anything", &stats, &rules()),
            Err(Error::EmptyCorpusStats)
        ));
    }

    #[test]
    fn lowering_threshold_never_increases_flags() {
        let stats = reference_stats();
        let questions = [
            "Sudo list all cities",
            "How many items are in group 3?",
            "Peculiar opening words here?",
        ];
        let mut flags_by_threshold = Vec::new();
        for threshold in [0usize, 1, 5, 50] {
            let mut config = rules();
            config.question_scan.min_token_frequency = threshold;
            let flags = questions
                .iter()
                .filter(|q| scan_question(q, &stats, &config).unwrap().flagged)
                .count();
            flags_by_threshold.push(flags);
        }
        for pair in flags_by_threshold.windows(2) {
            assert!(pair[0] <= pair[1], "flags must grow with threshold: {flags_by_threshold:?}");
        }
    }
}
