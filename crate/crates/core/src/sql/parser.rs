//! Recursive-descent parser for the corpus dialect: SELECT with joins,
//! subqueries, set operations, aggregates, GROUP BY / HAVING / ORDER BY /
//! LIMIT, plus stacked statements (`;`), DROP TABLE and SHUTDOWN as they
//! appear in injected payloads.
//!
//! Parsing is total over non-empty input: grammar failures degrade to a
//! lexical-only [`SqlAst`] instead of erroring, so downstream passes can
//! still run token-level analyses.

use super::ast::*;
use super::lexer::{lex, Keyword, Span, Token, TokenKind};
use crate::error::{Error, Result};

/// Parse raw SQL text. Only empty input is an error; anything else yields
/// an AST, degraded when the grammar cannot fully parse.
pub fn parse(raw: &str) -> Result<SqlAst> {
    if raw.trim().is_empty() {
        return Err(Error::EmptySql);
    }
    let lexed = lex(raw);
    let degraded_ast = |tokens: Vec<Token>| SqlAst {
        raw: raw.to_string(),
        statements: Vec::new(),
        degraded: true,
        tokens,
    };
    if lexed.has_unknown {
        return Ok(degraded_ast(lexed.tokens));
    }
    let significant: Vec<Token> = lexed
        .tokens
        .iter()
        .filter(|t| !t.kind.is_trivia())
        .cloned()
        .collect();
    let mut parser = Parser {
        tokens: &significant,
        pos: 0,
    };
    match parser.parse_statements() {
        Ok(statements) if !statements.is_empty() => Ok(SqlAst {
            raw: raw.to_string(),
            statements,
            degraded: false,
            tokens: lexed.tokens,
        }),
        _ => Ok(degraded_ast(lexed.tokens)),
    }
}

struct ParseError;
type PResult<T> = std::result::Result<T, ParseError>;

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    fn advance(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.pos);
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn at_keyword(&self, kw: Keyword) -> bool {
        matches!(self.peek(), Some(TokenKind::Keyword(k)) if *k == kw)
    }

    fn eat_keyword(&mut self, kw: Keyword) -> bool {
        if self.at_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: Keyword) -> PResult<&'a Token> {
        if self.at_keyword(kw) {
            Ok(self.advance().unwrap())
        } else {
            Err(ParseError)
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(TokenKind::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: &TokenKind) -> PResult<()> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(ParseError)
        }
    }

    /// Byte offset just past the most recently consumed token.
    fn last_end(&self) -> usize {
        self.tokens
            .get(self.pos.saturating_sub(1))
            .map(|t| t.span.end)
            .unwrap_or(0)
    }

    fn current_start(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.span.start)
            .unwrap_or_else(|| self.last_end())
    }

    fn parse_statements(&mut self) -> PResult<Vec<Statement>> {
        let mut statements = Vec::new();
        loop {
            while self.eat(&TokenKind::Semicolon) {}
            if self.peek().is_none() {
                break;
            }
            statements.push(self.parse_statement()?);
            match self.peek() {
                None => break,
                Some(TokenKind::Semicolon) => continue,
                _ => return Err(ParseError),
            }
        }
        Ok(statements)
    }

    fn parse_statement(&mut self) -> PResult<Statement> {
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::Select)) => {
                Ok(Statement::Select(self.parse_select_statement()?))
            }
            Some(TokenKind::Keyword(Keyword::Drop)) => {
                let start = self.current_start();
                self.advance();
                self.expect_keyword(Keyword::Table)?;
                let table = self.parse_ident()?;
                let end = self.last_end();
                Ok(Statement::DropTable(DropTableStatement {
                    table,
                    span: Span::new(start, end),
                }))
            }
            Some(TokenKind::Keyword(Keyword::Shutdown)) => {
                let start = self.current_start();
                self.advance();
                let end = self.last_end();
                Ok(Statement::Shutdown(ShutdownStatement {
                    span: Span::new(start, end),
                }))
            }
            _ => Err(ParseError),
        }
    }

    fn parse_select_statement(&mut self) -> PResult<SelectStatement> {
        let start = self.current_start();
        let mut body = SetExpr::Select(Box::new(self.parse_select_core()?));
        loop {
            let op = match self.peek() {
                Some(TokenKind::Keyword(Keyword::Union)) => SetOp::Union,
                Some(TokenKind::Keyword(Keyword::Intersect)) => SetOp::Intersect,
                Some(TokenKind::Keyword(Keyword::Except)) => SetOp::Except,
                _ => break,
            };
            self.advance();
            let all = self.eat_keyword(Keyword::All);
            let right = Box::new(self.parse_select_core()?);
            body = SetExpr::Compound {
                left: Box::new(body),
                op,
                all,
                right,
            };
        }
        let order_by = if self.eat_keyword(Keyword::Order) {
            self.expect_keyword(Keyword::By)?;
            self.parse_order_items()?
        } else {
            Vec::new()
        };
        let limit = if self.eat_keyword(Keyword::Limit) {
            let first = self.parse_expr()?;
            if self.eat_keyword(Keyword::Offset) {
                let offset = self.parse_expr()?;
                Some(LimitClause {
                    limit: first,
                    offset: Some(offset),
                })
            } else if self.eat(&TokenKind::Comma) {
                // MySQL style LIMIT offset, count
                let count = self.parse_expr()?;
                Some(LimitClause {
                    limit: count,
                    offset: Some(first),
                })
            } else {
                Some(LimitClause {
                    limit: first,
                    offset: None,
                })
            }
        } else {
            None
        };
        let end = self.last_end();
        Ok(SelectStatement {
            body,
            order_by,
            limit,
            span: Span::new(start, end),
        })
    }

    fn parse_select_core(&mut self) -> PResult<SelectCore> {
        self.expect_keyword(Keyword::Select)?;
        let distinct = if self.eat_keyword(Keyword::Distinct) {
            true
        } else {
            self.eat_keyword(Keyword::All);
            false
        };
        let mut items = vec![self.parse_select_item()?];
        while self.eat(&TokenKind::Comma) {
            items.push(self.parse_select_item()?);
        }
        let from = if self.eat_keyword(Keyword::From) {
            Some(self.parse_from_clause()?)
        } else {
            None
        };
        let where_clause = if self.at_keyword(Keyword::Where) {
            let keyword_span = self.tokens[self.pos].span;
            self.advance();
            let condition = self.parse_expr()?;
            let condition_end = self.last_end();
            Some(WhereClause {
                condition,
                keyword_span,
                condition_end,
            })
        } else {
            None
        };
        let group_by = if self.eat_keyword(Keyword::Group) {
            self.expect_keyword(Keyword::By)?;
            let mut exprs = vec![self.parse_expr()?];
            while self.eat(&TokenKind::Comma) {
                exprs.push(self.parse_expr()?);
            }
            exprs
        } else {
            Vec::new()
        };
        let having = if self.eat_keyword(Keyword::Having) {
            Some(self.parse_expr()?)
        } else {
            None
        };
        Ok(SelectCore {
            distinct,
            items,
            from,
            where_clause,
            group_by,
            having,
        })
    }

    fn parse_select_item(&mut self) -> PResult<SelectItem> {
        if matches!(self.peek(), Some(TokenKind::Op("*"))) {
            self.advance();
            return Ok(SelectItem::Star { table: None });
        }
        // table.* lookahead
        if matches!(self.peek(), Some(TokenKind::Ident { .. }))
            && self.peek_at(1) == Some(&TokenKind::Dot)
            && matches!(self.peek_at(2), Some(TokenKind::Op("*")))
        {
            let table = self.parse_ident()?;
            self.advance(); // dot
            self.advance(); // star
            return Ok(SelectItem::Star { table: Some(table) });
        }
        let expr = self.parse_expr()?;
        let alias = if self.eat_keyword(Keyword::As) {
            Some(self.parse_ident()?)
        } else {
            None
        };
        Ok(SelectItem::Expr { expr, alias })
    }

    fn parse_from_clause(&mut self) -> PResult<FromClause> {
        let first = self.parse_table_ref()?;
        let mut rest = Vec::new();
        loop {
            let join = if self.eat(&TokenKind::Comma) {
                JoinKind::Comma
            } else if self.at_keyword(Keyword::Join) {
                self.advance();
                JoinKind::Inner
            } else if self.at_keyword(Keyword::Inner) {
                self.advance();
                self.expect_keyword(Keyword::Join)?;
                JoinKind::Inner
            } else if self.at_keyword(Keyword::Left) {
                self.advance();
                self.eat_keyword(Keyword::Outer);
                self.expect_keyword(Keyword::Join)?;
                JoinKind::Left
            } else if self.at_keyword(Keyword::Right) {
                self.advance();
                self.eat_keyword(Keyword::Outer);
                self.expect_keyword(Keyword::Join)?;
                JoinKind::Right
            } else if self.at_keyword(Keyword::Full) {
                self.advance();
                self.eat_keyword(Keyword::Outer);
                self.expect_keyword(Keyword::Join)?;
                JoinKind::Full
            } else if self.at_keyword(Keyword::Cross) {
                self.advance();
                self.expect_keyword(Keyword::Join)?;
                JoinKind::Cross
            } else {
                break;
            };
            let table = self.parse_table_ref()?;
            let on = if self.eat_keyword(Keyword::On) {
                Some(self.parse_expr()?)
            } else {
                None
            };
            rest.push(FromOp { join, table, on });
        }
        Ok(FromClause { first, rest })
    }

    fn parse_table_ref(&mut self) -> PResult<TableRef> {
        if self.eat(&TokenKind::LParen) {
            let query = Box::new(self.parse_select_statement()?);
            self.expect(&TokenKind::RParen)?;
            let alias = self.parse_opt_alias()?;
            return Ok(TableRef::Subquery { query, alias });
        }
        let name = self.parse_ident()?;
        let alias = self.parse_opt_alias()?;
        Ok(TableRef::Named { name, alias })
    }

    fn parse_opt_alias(&mut self) -> PResult<Option<Ident>> {
        if self.eat_keyword(Keyword::As) {
            return Ok(Some(self.parse_ident()?));
        }
        // bare alias: `FROM city c`
        if matches!(self.peek(), Some(TokenKind::Ident { .. })) {
            return Ok(Some(self.parse_ident()?));
        }
        Ok(None)
    }

    fn parse_ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(TokenKind::Ident { text, quoted }) => {
                let ident = Ident {
                    name: text.clone(),
                    quoted: *quoted,
                };
                self.advance();
                Ok(ident)
            }
            _ => Err(ParseError),
        }
    }

    fn parse_order_items(&mut self) -> PResult<Vec<OrderItem>> {
        let mut items = Vec::new();
        loop {
            let expr = self.parse_expr()?;
            let direction = if self.eat_keyword(Keyword::Asc) {
                Some(OrderDirection::Asc)
            } else if self.eat_keyword(Keyword::Desc) {
                Some(OrderDirection::Desc)
            } else {
                None
            };
            items.push(OrderItem { expr, direction });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        Ok(items)
    }

    // Expression grammar, lowest precedence first.

    fn parse_expr(&mut self) -> PResult<Expr> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> PResult<Expr> {
        let mut left = self.parse_and()?;
        while self.eat_keyword(Keyword::Or) {
            let right = self.parse_and()?;
            left = Expr::Binary {
                left: Box::new(left),
                op: BinOp::Or,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> PResult<Expr> {
        let mut left = self.parse_not()?;
        while self.eat_keyword(Keyword::And) {
            let right = self.parse_not()?;
            left = Expr::Binary {
                left: Box::new(left),
                op: BinOp::And,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_not(&mut self) -> PResult<Expr> {
        if self.eat_keyword(Keyword::Not) {
            let inner = self.parse_not()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                expr: Box::new(inner),
            });
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> PResult<Expr> {
        let left = self.parse_additive()?;
        let op = match self.peek() {
            Some(TokenKind::Op("=")) => Some(BinOp::Eq),
            Some(TokenKind::Op("!=")) | Some(TokenKind::Op("<>")) => Some(BinOp::NotEq),
            Some(TokenKind::Op("<")) => Some(BinOp::Lt),
            Some(TokenKind::Op("<=")) => Some(BinOp::LtEq),
            Some(TokenKind::Op(">")) => Some(BinOp::Gt),
            Some(TokenKind::Op(">=")) => Some(BinOp::GtEq),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let right = self.parse_additive()?;
            return Ok(Expr::Binary {
                left: Box::new(left),
                op,
                right: Box::new(right),
            });
        }
        if self.eat_keyword(Keyword::Is) {
            let negated = self.eat_keyword(Keyword::Not);
            self.expect_keyword(Keyword::Null)?;
            return Ok(Expr::IsNull {
                expr: Box::new(left),
                negated,
            });
        }
        let negated = self.eat_keyword(Keyword::Not);
        if self.eat_keyword(Keyword::Like) {
            let pattern = self.parse_additive()?;
            return Ok(Expr::Like {
                expr: Box::new(left),
                pattern: Box::new(pattern),
                negated,
            });
        }
        if self.eat_keyword(Keyword::Between) {
            let low = self.parse_additive()?;
            self.expect_keyword(Keyword::And)?;
            let high = self.parse_additive()?;
            return Ok(Expr::Between {
                expr: Box::new(left),
                low: Box::new(low),
                high: Box::new(high),
                negated,
            });
        }
        if self.eat_keyword(Keyword::In) {
            self.expect(&TokenKind::LParen)?;
            if self.at_keyword(Keyword::Select) {
                let subquery = Box::new(self.parse_select_statement()?);
                self.expect(&TokenKind::RParen)?;
                return Ok(Expr::InSubquery {
                    expr: Box::new(left),
                    subquery,
                    negated,
                });
            }
            let mut list = vec![self.parse_expr()?];
            while self.eat(&TokenKind::Comma) {
                list.push(self.parse_expr()?);
            }
            self.expect(&TokenKind::RParen)?;
            return Ok(Expr::InList {
                expr: Box::new(left),
                list,
                negated,
            });
        }
        if negated {
            // NOT consumed but no LIKE/BETWEEN/IN followed
            return Err(ParseError);
        }
        Ok(left)
    }

    fn parse_additive(&mut self) -> PResult<Expr> {
        let mut left = self.parse_multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Op("+")) => BinOp::Add,
                Some(TokenKind::Op("-")) => BinOp::Sub,
                Some(TokenKind::Op("||")) => BinOp::Concat,
                _ => break,
            };
            self.advance();
            let right = self.parse_multiplicative()?;
            left = Expr::Binary {
                left: Box::new(left),
                op,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_multiplicative(&mut self) -> PResult<Expr> {
        let mut left = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Op("*")) => BinOp::Mul,
                Some(TokenKind::Op("/")) => BinOp::Div,
                Some(TokenKind::Op("%")) => BinOp::Mod,
                _ => break,
            };
            self.advance();
            let right = self.parse_unary()?;
            left = Expr::Binary {
                left: Box::new(left),
                op,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> PResult<Expr> {
        if self.eat_op("-") {
            let inner = self.parse_unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Neg,
                expr: Box::new(inner),
            });
        }
        if self.eat_op("+") {
            let inner = self.parse_unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Plus,
                expr: Box::new(inner),
            });
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        match self.peek().cloned() {
            Some(TokenKind::Number(n)) => {
                self.advance();
                Ok(Expr::Literal(Literal::Number(n)))
            }
            Some(TokenKind::StringLit(s)) => {
                self.advance();
                Ok(Expr::Literal(Literal::String(s)))
            }
            Some(TokenKind::Keyword(Keyword::Null)) => {
                self.advance();
                Ok(Expr::Literal(Literal::Null))
            }
            Some(TokenKind::SysVar(name)) => {
                self.advance();
                Ok(Expr::SysVar(name))
            }
            Some(TokenKind::Keyword(Keyword::Exists)) => {
                self.advance();
                self.expect(&TokenKind::LParen)?;
                let subquery = Box::new(self.parse_select_statement()?);
                self.expect(&TokenKind::RParen)?;
                Ok(Expr::Exists {
                    subquery,
                    negated: false,
                })
            }
            Some(TokenKind::Keyword(Keyword::Convert)) => {
                self.advance();
                self.expect(&TokenKind::LParen)?;
                let type_name = self.parse_type_name()?;
                self.expect(&TokenKind::Comma)?;
                let expr = self.parse_expr()?;
                self.expect(&TokenKind::RParen)?;
                Ok(Expr::Convert {
                    type_name,
                    expr: Box::new(expr),
                })
            }
            Some(TokenKind::Keyword(Keyword::Cast)) => {
                self.advance();
                self.expect(&TokenKind::LParen)?;
                let expr = self.parse_expr()?;
                self.expect_keyword(Keyword::As)?;
                let type_name = self.parse_type_name()?;
                self.expect(&TokenKind::RParen)?;
                Ok(Expr::Cast {
                    expr: Box::new(expr),
                    type_name,
                })
            }
            Some(TokenKind::LParen) => {
                self.advance();
                if self.at_keyword(Keyword::Select) {
                    let subquery = Box::new(self.parse_select_statement()?);
                    self.expect(&TokenKind::RParen)?;
                    return Ok(Expr::Subquery(subquery));
                }
                let inner = self.parse_expr()?;
                self.expect(&TokenKind::RParen)?;
                Ok(Expr::Paren(Box::new(inner)))
            }
            Some(TokenKind::Ident { .. }) => {
                if self.peek_at(1) == Some(&TokenKind::LParen) {
                    return self.parse_function_call();
                }
                let first = self.parse_ident()?;
                if self.eat(&TokenKind::Dot) {
                    let column = self.parse_ident()?;
                    return Ok(Expr::Column(ColumnRef {
                        table: Some(first),
                        column,
                    }));
                }
                Ok(Expr::Column(ColumnRef {
                    table: None,
                    column: first,
                }))
            }
            _ => Err(ParseError),
        }
    }

    fn parse_function_call(&mut self) -> PResult<Expr> {
        let name = self.parse_ident()?;
        self.expect(&TokenKind::LParen)?;
        if matches!(self.peek(), Some(TokenKind::Op("*"))) {
            self.advance();
            self.expect(&TokenKind::RParen)?;
            return Ok(Expr::FunctionCall {
                name,
                distinct: false,
                star: true,
                args: Vec::new(),
            });
        }
        let distinct = self.eat_keyword(Keyword::Distinct);
        let mut args = Vec::new();
        if self.peek() != Some(&TokenKind::RParen) {
            args.push(self.parse_expr()?);
            while self.eat(&TokenKind::Comma) {
                args.push(self.parse_expr()?);
            }
        }
        self.expect(&TokenKind::RParen)?;
        Ok(Expr::FunctionCall {
            name,
            distinct,
            star: false,
            args,
        })
    }

    /// Type names in CONVERT/CAST: a bare word, possibly parameterized
    /// like varchar(10). Keywords are accepted as words.
    fn parse_type_name(&mut self) -> PResult<String> {
        let word = match self.peek() {
            Some(TokenKind::Ident { text, .. }) => text.clone(),
            Some(TokenKind::Keyword(k)) => k.as_str().to_ascii_lowercase(),
            _ => return Err(ParseError),
        };
        self.advance();
        if self.peek() == Some(&TokenKind::LParen) {
            self.advance();
            let mut params = String::new();
            loop {
                match self.peek() {
                    Some(TokenKind::Number(n)) => {
                        if !params.is_empty() {
                            params.push(',');
                        }
                        params.push_str(n);
                        self.advance();
                    }
                    Some(TokenKind::Comma) => {
                        self.advance();
                    }
                    Some(TokenKind::RParen) => {
                        self.advance();
                        break;
                    }
                    _ => return Err(ParseError),
                }
            }
            return Ok(format!("{word}({params})"));
        }
        Ok(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parsed(sql: &str) -> SqlAst {
        let ast = parse(sql).expect("non-empty input");
        assert!(!ast.degraded, "expected clean parse for: {sql}");
        ast
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse(""), Err(Error::EmptySql)));
        assert!(matches!(parse("   "), Err(Error::EmptySql)));
    }

    #[test]
    fn minimal_statement() {
        let ast = parsed("SELECT 1");
        let core = ast.first_select().unwrap().first_core();
        assert!(core.from.is_none());
        assert!(core.where_clause.is_none());
        assert_eq!(core.items.len(), 1);
    }

    #[test]
    fn select_with_single_predicate() {
        let ast = parsed("SELECT Official_Name FROM city WHERE Population > 1500");
        let core = ast.first_select().unwrap().first_core();
        let wc = core.where_clause.as_ref().expect("where clause");
        assert!(matches!(
            &wc.condition,
            Expr::Binary { op: BinOp::Gt, .. }
        ));
        assert_eq!(
            ast.first_select().unwrap().first_named_table().unwrap().name,
            "city"
        );
    }

    #[test]
    fn multi_statement_matches_hand_built_fixture() {
        let ast = parsed("SELECT a FROM t; DROP TABLE t;");
        assert_eq!(ast.statements.len(), 2);
        assert!(ast.is_multi_statement());
        // Hand-built expectation for the second statement.
        let expected = Statement::DropTable(DropTableStatement {
            table: Ident::plain("t"),
            span: Span::new(0, 0), // ignored by equality
        });
        assert_eq!(ast.statements[1], expected);
        match &ast.statements[0] {
            Statement::Select(stmt) => {
                assert_eq!(stmt.first_named_table().unwrap().name, "t");
            }
            other => panic!("expected select, got {other:?}"),
        }
    }

    #[test]
    fn where_spans_point_into_raw() {
        let raw = "SELECT a FROM t WHERE b > 0 GROUP BY a";
        let ast = parsed(raw);
        let core = ast.first_select().unwrap().first_core();
        let wc = core.where_clause.as_ref().unwrap();
        assert_eq!(&raw[wc.keyword_span.start..wc.keyword_span.end], "WHERE");
        assert_eq!(&raw[wc.keyword_span.start..wc.condition_end], "WHERE b > 0");
    }

    #[test]
    fn compound_set_operation() {
        let ast = parsed("SELECT name FROM a UNION SELECT name FROM b");
        let stmt = ast.first_select().unwrap();
        assert!(stmt.is_compound());
        let tables: Vec<_> = stmt.named_tables().iter().map(|i| i.name.clone()).collect();
        assert_eq!(tables, vec!["a", "b"]);
    }

    #[test]
    fn joins_and_aliases() {
        let ast = parsed(
            "SELECT T1.name FROM stadium AS T1 JOIN concert AS T2 ON T1.id = T2.stadium_id WHERE T2.year > 2014",
        );
        let stmt = ast.first_select().unwrap();
        assert_eq!(stmt.first_named_table().unwrap().name, "stadium");
        assert!(ast.clause_profile().has_where_top_level);
    }

    #[test]
    fn nested_subquery_in_where() {
        let ast = parsed("SELECT name FROM t WHERE id IN (SELECT id FROM u WHERE x > 3)");
        assert!(ast.clause_profile().has_where_top_level);
    }

    #[test]
    fn subquery_only_where_is_not_top_level() {
        let ast = parsed("SELECT a FROM (SELECT b FROM u WHERE c = 1) s");
        let profile = ast.clause_profile();
        assert!(!profile.has_where_top_level);
        assert!(profile.has_where_anywhere);
        assert!(profile.has_from);
    }

    #[test]
    fn set_op_arm_where_is_not_top_level() {
        let ast = parsed("SELECT a FROM t WHERE x > 1 UNION SELECT a FROM u");
        let profile = ast.clause_profile();
        assert!(!profile.has_where_top_level);
        assert!(profile.has_where_anywhere);
    }

    #[test]
    fn order_and_limit() {
        let ast = parsed("SELECT name FROM t ORDER BY age DESC LIMIT 3");
        let stmt = ast.first_select().unwrap();
        assert_eq!(stmt.order_by.len(), 1);
        assert!(stmt.limit.is_some());
    }

    #[test]
    fn aggregates_and_group_by() {
        let ast = parsed("SELECT country, count(*) FROM city GROUP BY country HAVING count(*) > 2");
        let core = ast.first_select().unwrap().first_core();
        assert_eq!(core.group_by.len(), 1);
        assert!(core.having.is_some());
        assert!(matches!(
            &core.items[1],
            SelectItem::Expr { expr: Expr::FunctionCall { star: true, .. }, .. }
        ));
    }

    #[test]
    fn convert_and_sysvar_payload_shape() {
        let ast = parsed("SELECT a FROM t WHERE x > 1 AND 1 = CONVERT(int, (SELECT @@version))");
        assert!(!ast.degraded);
    }

    #[test]
    fn shutdown_statement() {
        let ast = parsed("SELECT a FROM t WHERE b = 1; SHUTDOWN;");
        assert_eq!(ast.statements.len(), 2);
        assert!(matches!(ast.statements[1], Statement::Shutdown(_)));
    }

    #[test]
    fn unsupported_grammar_degrades() {
        let ast = parse("INSERT INTO t VALUES (1)").unwrap();
        assert!(ast.degraded);
        assert!(!ast.tokens.is_empty());
        let ast = parse("SELECT FROM WHERE").unwrap();
        assert!(ast.degraded);
    }

    #[test]
    fn unknown_characters_degrade() {
        let ast = parse("SELECT a FROM t WHERE x ~ 1").unwrap();
        assert!(ast.degraded);
    }

    #[test]
    fn between_and_not_variants() {
        parsed("SELECT a FROM t WHERE x BETWEEN 1 AND 10");
        parsed("SELECT a FROM t WHERE x NOT BETWEEN 1 AND 10");
        parsed("SELECT a FROM t WHERE name NOT LIKE '%x%'");
        parsed("SELECT a FROM t WHERE x IS NOT NULL");
        parsed("SELECT a FROM t WHERE NOT x = 1");
        parsed("SELECT a FROM t WHERE x NOT IN (1, 2, 3)");
    }

    #[test]
    fn trailing_semicolon_is_not_multi_statement() {
        let ast = parsed("SELECT a FROM t;");
        assert_eq!(ast.statements.len(), 1);
        assert!(!ast.is_multi_statement());
    }
}
