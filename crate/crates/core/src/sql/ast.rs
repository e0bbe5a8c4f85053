//! AST for the SELECT-centric dialect. Statement-level nodes carry byte
//! spans back into the raw text so transforms can splice payload fragments
//! without reformatting the query; structural equality ignores spans.

use super::lexer::{Keyword, Span, Token, TokenKind};

/// Parse result: one or more statements over the raw text, or a degraded
/// lexical-only view when the grammar cannot fully parse.
#[derive(Debug, Clone)]
pub struct SqlAst {
    pub raw: String,
    pub statements: Vec<Statement>,
    pub degraded: bool,
    /// Full lexical view, including comments. Always present.
    pub tokens: Vec<Token>,
}

impl SqlAst {
    pub fn is_multi_statement(&self) -> bool {
        if self.degraded {
            return statement_texts_lexical(&self.tokens).len() >= 2;
        }
        self.statements.len() >= 2
    }

    /// Structural equality: same statements, spans ignored.
    pub fn structurally_equal(&self, other: &SqlAst) -> bool {
        if self.degraded || other.degraded {
            return self.degraded == other.degraded && self.raw == other.raw;
        }
        self.statements == other.statements
    }

    pub fn clause_profile(&self) -> ClauseProfile {
        let has_where_anywhere = self
            .tokens
            .iter()
            .any(|t| t.kind == TokenKind::Keyword(Keyword::Where));
        if self.degraded {
            // Lexical fallback: report what the token stream shows.
            return ClauseProfile {
                has_where_top_level: false,
                has_where_anywhere,
                has_from: top_level_has_from(&self.tokens),
                is_multi_statement: self.is_multi_statement(),
            };
        }
        let first = self.statements.first();
        let has_where_top_level = self.statements.len() == 1
            && matches!(
                first,
                Some(Statement::Select(stmt))
                    if matches!(&stmt.body, SetExpr::Select(core) if core.where_clause.is_some())
            );
        let has_from = matches!(
            first,
            Some(Statement::Select(stmt)) if stmt.first_from().is_some()
        );
        ClauseProfile {
            has_where_top_level,
            has_where_anywhere,
            has_from,
            is_multi_statement: self.statements.len() >= 2,
        }
    }

    /// First statement if it is a select.
    pub fn first_select(&self) -> Option<&SelectStatement> {
        match self.statements.first() {
            Some(Statement::Select(s)) => Some(s),
            _ => None,
        }
    }
}

/// Clause flags used for poisoning eligibility.
///
/// `has_where_top_level` is true only for a single plain SELECT whose
/// outermost core has a WHERE. WHERE clauses inside subqueries or inside
/// set-operation arms do not count: payload fragments are only rendered at
/// the outermost condition, and widening an EXCEPT arm would shrink the
/// result instead of growing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClauseProfile {
    pub has_where_top_level: bool,
    pub has_where_anywhere: bool,
    pub has_from: bool,
    pub is_multi_statement: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Select(SelectStatement),
    DropTable(DropTableStatement),
    Shutdown(ShutdownStatement),
}

impl Statement {
    pub fn span(&self) -> Span {
        match self {
            Statement::Select(s) => s.span,
            Statement::DropTable(s) => s.span,
            Statement::Shutdown(s) => s.span,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectStatement {
    pub body: SetExpr,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<LimitClause>,
    pub span: Span,
}

impl PartialEq for SelectStatement {
    fn eq(&self, other: &Self) -> bool {
        // span intentionally excluded
        self.body == other.body && self.order_by == other.order_by && self.limit == other.limit
    }
}

impl SelectStatement {
    /// Outermost core: the first (textually leftmost) arm of the body.
    pub fn first_core(&self) -> &SelectCore {
        self.body.first_core()
    }

    pub fn is_compound(&self) -> bool {
        matches!(self.body, SetExpr::Compound { .. })
    }

    pub fn first_from(&self) -> Option<&FromClause> {
        self.first_core().from.as_ref()
    }

    /// First named table of the outermost FROM in source order, recursing
    /// into FROM subqueries.
    pub fn first_named_table(&self) -> Option<&Ident> {
        fn from_clause(fc: &FromClause) -> Option<&Ident> {
            for item in fc.items() {
                match item {
                    TableRef::Named { name, .. } => return Some(name),
                    TableRef::Subquery { query, .. } => {
                        if let Some(found) = query.first_named_table() {
                            return Some(found);
                        }
                    }
                }
            }
            None
        }
        self.first_from().and_then(from_clause)
    }

    /// All named tables referenced by the statement's FROM clauses,
    /// in source order, without deduplication across arms.
    pub fn named_tables(&self) -> Vec<&Ident> {
        fn walk_set<'a>(set: &'a SetExpr, out: &mut Vec<&'a Ident>) {
            match set {
                SetExpr::Select(core) => walk_core(core, out),
                SetExpr::Compound { left, right, .. } => {
                    walk_set(left, out);
                    walk_core(right, out);
                }
            }
        }
        fn walk_core<'a>(core: &'a SelectCore, out: &mut Vec<&'a Ident>) {
            if let Some(fc) = &core.from {
                for item in fc.items() {
                    match item {
                        TableRef::Named { name, .. } => out.push(name),
                        TableRef::Subquery { query, .. } => walk_set(&query.body, out),
                    }
                }
            }
        }
        let mut tables = Vec::new();
        walk_set(&self.body, &mut tables);
        tables
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetExpr {
    Select(Box<SelectCore>),
    Compound {
        left: Box<SetExpr>,
        op: SetOp,
        all: bool,
        right: Box<SelectCore>,
    },
}

impl SetExpr {
    pub fn first_core(&self) -> &SelectCore {
        match self {
            SetExpr::Select(core) => core,
            SetExpr::Compound { left, .. } => left.first_core(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Intersect,
    Except,
}

impl SetOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            SetOp::Union => "UNION",
            SetOp::Intersect => "INTERSECT",
            SetOp::Except => "EXCEPT",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectCore {
    pub distinct: bool,
    pub items: Vec<SelectItem>,
    pub from: Option<FromClause>,
    pub where_clause: Option<WhereClause>,
    pub group_by: Vec<Expr>,
    pub having: Option<Expr>,
}

impl PartialEq for SelectCore {
    fn eq(&self, other: &Self) -> bool {
        self.distinct == other.distinct
            && self.items == other.items
            && self.from == other.from
            && self.where_clause == other.where_clause
            && self.group_by == other.group_by
            && self.having == other.having
    }
}

#[derive(Debug, Clone)]
pub struct WhereClause {
    pub condition: Expr,
    /// Span of the WHERE keyword itself.
    pub keyword_span: Span,
    /// Byte offset just past the last token of the condition.
    pub condition_end: usize,
}

impl PartialEq for WhereClause {
    fn eq(&self, other: &Self) -> bool {
        // spans intentionally excluded
        self.condition == other.condition
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    /// `*` or `table.*`
    Star { table: Option<Ident> },
    Expr { expr: Expr, alias: Option<Ident> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FromClause {
    pub first: TableRef,
    pub rest: Vec<FromOp>,
}

impl FromClause {
    pub fn items(&self) -> impl Iterator<Item = &TableRef> {
        std::iter::once(&self.first).chain(self.rest.iter().map(|op| &op.table))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FromOp {
    pub join: JoinKind,
    pub table: TableRef,
    pub on: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    Comma,
    Inner,
    Left,
    Right,
    Full,
    Cross,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableRef {
    Named {
        name: Ident,
        alias: Option<Ident>,
    },
    Subquery {
        query: Box<SelectStatement>,
        alias: Option<Ident>,
    },
}

/// Identifier with its quoting recorded from the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub quoted: bool,
}

impl Ident {
    pub fn plain(name: impl Into<String>) -> Self {
        Ident {
            name: name.into(),
            quoted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderItem {
    pub expr: Expr,
    pub direction: Option<OrderDirection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderDirection {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitClause {
    pub limit: Expr,
    pub offset: Option<Expr>,
}

#[derive(Debug, Clone)]
pub struct DropTableStatement {
    pub table: Ident,
    pub span: Span,
}

impl PartialEq for DropTableStatement {
    fn eq(&self, other: &Self) -> bool {
        self.table == other.table
    }
}

#[derive(Debug, Clone)]
pub struct ShutdownStatement {
    pub span: Span,
}

impl PartialEq for ShutdownStatement {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Literal),
    Column(ColumnRef),
    SysVar(String),
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    Binary {
        left: Box<Expr>,
        op: BinOp,
        right: Box<Expr>,
    },
    FunctionCall {
        name: Ident,
        distinct: bool,
        /// `f(*)`
        star: bool,
        args: Vec<Expr>,
    },
    Convert {
        type_name: String,
        expr: Box<Expr>,
    },
    Cast {
        expr: Box<Expr>,
        type_name: String,
    },
    Paren(Box<Expr>),
    Subquery(Box<SelectStatement>),
    Exists {
        subquery: Box<SelectStatement>,
        negated: bool,
    },
    InList {
        expr: Box<Expr>,
        list: Vec<Expr>,
        negated: bool,
    },
    InSubquery {
        expr: Box<Expr>,
        subquery: Box<SelectStatement>,
        negated: bool,
    },
    Between {
        expr: Box<Expr>,
        low: Box<Expr>,
        high: Box<Expr>,
        negated: bool,
    },
    Like {
        expr: Box<Expr>,
        pattern: Box<Expr>,
        negated: bool,
    },
    IsNull {
        expr: Box<Expr>,
        negated: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(String),
    String(String),
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnRef {
    pub table: Option<Ident>,
    pub column: Ident,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Concat,
}

impl BinOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            BinOp::Or => "OR",
            BinOp::And => "AND",
            BinOp::Eq => "=",
            BinOp::NotEq => "!=",
            BinOp::Lt => "<",
            BinOp::LtEq => "<=",
            BinOp::Gt => ">",
            BinOp::GtEq => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Concat => "||",
        }
    }
}

/// Split a token stream into per-statement slices at depth-0 semicolons.
/// Works on any lexable text, parsed or not.
pub fn statement_texts_lexical(tokens: &[Token]) -> Vec<&[Token]> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, tok) in tokens.iter().enumerate() {
        match tok.kind {
            TokenKind::LParen => depth += 1,
            TokenKind::RParen => depth = depth.saturating_sub(1),
            TokenKind::Semicolon if depth == 0 => {
                if tokens[start..i]
                    .iter()
                    .any(|t| !t.kind.is_trivia())
                {
                    out.push(&tokens[start..i]);
                }
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < tokens.len()
        && tokens[start..]
            .iter()
            .any(|t| !t.kind.is_trivia())
    {
        out.push(&tokens[start..]);
    }
    out
}

/// True when a FROM keyword appears at paren depth 0, i.e. at statement
/// level rather than inside a subquery.
pub fn top_level_has_from(tokens: &[Token]) -> bool {
    let mut depth = 0usize;
    for tok in tokens {
        match tok.kind {
            TokenKind::LParen => depth += 1,
            TokenKind::RParen => depth = depth.saturating_sub(1),
            TokenKind::Keyword(Keyword::From) if depth == 0 => return true,
            _ => {}
        }
    }
    false
}

/// True when an ORDER keyword appears at paren depth 0.
pub fn top_level_has_order_by(tokens: &[Token]) -> bool {
    let mut depth = 0usize;
    for tok in tokens {
        match tok.kind {
            TokenKind::LParen => depth += 1,
            TokenKind::RParen => depth = depth.saturating_sub(1),
            TokenKind::Keyword(Keyword::Order) if depth == 0 => return true,
            _ => {}
        }
    }
    false
}
