//! Canonical single-line rendering of the AST. Re-parsing the output
//! yields a structurally equal AST; degraded parses serialize back to the
//! original raw text verbatim.

use super::ast::*;

pub fn serialize(ast: &SqlAst) -> String {
    if ast.degraded {
        return ast.raw.clone();
    }
    let parts: Vec<String> = ast.statements.iter().map(serialize_statement).collect();
    parts.join("; ")
}

pub fn serialize_statement(stmt: &Statement) -> String {
    match stmt {
        Statement::Select(s) => serialize_select(s),
        Statement::DropTable(d) => format!("DROP TABLE {}", ident(&d.table)),
        Statement::Shutdown(_) => "SHUTDOWN".to_string(),
    }
}

pub fn serialize_select(stmt: &SelectStatement) -> String {
    let mut out = serialize_set_expr(&stmt.body);
    if !stmt.order_by.is_empty() {
        let items: Vec<String> = stmt
            .order_by
            .iter()
            .map(|item| {
                let mut s = expr(&item.expr);
                match item.direction {
                    Some(OrderDirection::Asc) => s.push_str(" ASC"),
                    Some(OrderDirection::Desc) => s.push_str(" DESC"),
                    None => {}
                }
                s
            })
            .collect();
        out.push_str(" ORDER BY ");
        out.push_str(&items.join(", "));
    }
    if let Some(limit) = &stmt.limit {
        out.push_str(" LIMIT ");
        out.push_str(&expr(&limit.limit));
        if let Some(offset) = &limit.offset {
            out.push_str(" OFFSET ");
            out.push_str(&expr(offset));
        }
    }
    out
}

fn serialize_set_expr(set: &SetExpr) -> String {
    match set {
        SetExpr::Select(core) => serialize_core(core),
        SetExpr::Compound {
            left,
            op,
            all,
            right,
        } => {
            let mut out = serialize_set_expr(left);
            out.push(' ');
            out.push_str(op.as_str());
            if *all {
                out.push_str(" ALL");
            }
            out.push(' ');
            out.push_str(&serialize_core(right));
            out
        }
    }
}

fn serialize_core(core: &SelectCore) -> String {
    let mut out = String::from("SELECT ");
    if core.distinct {
        out.push_str("DISTINCT ");
    }
    let items: Vec<String> = core
        .items
        .iter()
        .map(|item| match item {
            SelectItem::Star { table: None } => "*".to_string(),
            SelectItem::Star { table: Some(t) } => format!("{}.*", ident(t)),
            SelectItem::Expr { expr: e, alias } => {
                let mut s = expr(e);
                if let Some(a) = alias {
                    s.push_str(" AS ");
                    s.push_str(&ident(a));
                }
                s
            }
        })
        .collect();
    out.push_str(&items.join(", "));
    if let Some(fc) = &core.from {
        out.push_str(" FROM ");
        out.push_str(&from_clause(fc));
    }
    if let Some(wc) = &core.where_clause {
        out.push_str(" WHERE ");
        out.push_str(&expr(&wc.condition));
    }
    if !core.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        let exprs: Vec<String> = core.group_by.iter().map(expr).collect();
        out.push_str(&exprs.join(", "));
    }
    if let Some(h) = &core.having {
        out.push_str(" HAVING ");
        out.push_str(&expr(h));
    }
    out
}

fn from_clause(fc: &FromClause) -> String {
    let mut out = table_ref(&fc.first);
    for op in &fc.rest {
        match op.join {
            JoinKind::Comma => {
                out.push_str(", ");
                out.push_str(&table_ref(&op.table));
            }
            kind => {
                out.push(' ');
                out.push_str(match kind {
                    JoinKind::Inner => "JOIN",
                    JoinKind::Left => "LEFT JOIN",
                    JoinKind::Right => "RIGHT JOIN",
                    JoinKind::Full => "FULL JOIN",
                    JoinKind::Cross => "CROSS JOIN",
                    JoinKind::Comma => unreachable!(),
                });
                out.push(' ');
                out.push_str(&table_ref(&op.table));
            }
        }
        if let Some(on) = &op.on {
            out.push_str(" ON ");
            out.push_str(&expr(on));
        }
    }
    out
}

fn table_ref(tr: &TableRef) -> String {
    match tr {
        TableRef::Named { name, alias } => {
            let mut out = ident(name);
            if let Some(a) = alias {
                out.push_str(" AS ");
                out.push_str(&ident(a));
            }
            out
        }
        TableRef::Subquery { query, alias } => {
            let mut out = format!("({})", serialize_select(query));
            if let Some(a) = alias {
                out.push_str(" AS ");
                out.push_str(&ident(a));
            }
            out
        }
    }
}

fn ident(id: &Ident) -> String {
    if id.quoted {
        format!("\"{}\"", id.name)
    } else {
        id.name.clone()
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Literal(Literal::Number(n)) => n.clone(),
        Expr::Literal(Literal::String(s)) => format!("'{}'", s.replace('\'', "''")),
        Expr::Literal(Literal::Null) => "NULL".to_string(),
        Expr::Column(c) => match &c.table {
            Some(t) => format!("{}.{}", ident(t), ident(&c.column)),
            None => ident(&c.column),
        },
        Expr::SysVar(name) => format!("@@{name}"),
        Expr::Unary { op, expr: inner } => match op {
            UnaryOp::Not => format!("NOT {}", expr(inner)),
            UnaryOp::Neg => format!("-{}", expr(inner)),
            UnaryOp::Plus => format!("+{}", expr(inner)),
        },
        Expr::Binary { left, op, right } => {
            format!("{} {} {}", expr(left), op.as_str(), expr(right))
        }
        Expr::FunctionCall {
            name,
            distinct,
            star,
            args,
        } => {
            if *star {
                format!("{}(*)", ident(name))
            } else {
                let rendered: Vec<String> = args.iter().map(expr).collect();
                format!(
                    "{}({}{})",
                    ident(name),
                    if *distinct { "DISTINCT " } else { "" },
                    rendered.join(", ")
                )
            }
        }
        Expr::Convert { type_name, expr: inner } => {
            format!("CONVERT({type_name}, {})", expr(inner))
        }
        Expr::Cast { expr: inner, type_name } => {
            format!("CAST({} AS {type_name})", expr(inner))
        }
        Expr::Paren(inner) => format!("({})", expr(inner)),
        Expr::Subquery(q) => format!("({})", serialize_select(q)),
        Expr::Exists { subquery, negated } => {
            let prefix = if *negated { "NOT EXISTS" } else { "EXISTS" };
            format!("{prefix} ({})", serialize_select(subquery))
        }
        Expr::InList {
            expr: inner,
            list,
            negated,
        } => {
            let rendered: Vec<String> = list.iter().map(expr).collect();
            format!(
                "{} {}IN ({})",
                expr(inner),
                if *negated { "NOT " } else { "" },
                rendered.join(", ")
            )
        }
        Expr::InSubquery {
            expr: inner,
            subquery,
            negated,
        } => format!(
            "{} {}IN ({})",
            expr(inner),
            if *negated { "NOT " } else { "" },
            serialize_select(subquery)
        ),
        Expr::Between {
            expr: inner,
            low,
            high,
            negated,
        } => format!(
            "{} {}BETWEEN {} AND {}",
            expr(inner),
            if *negated { "NOT " } else { "" },
            expr(low),
            expr(high)
        ),
        Expr::Like {
            expr: inner,
            pattern,
            negated,
        } => format!(
            "{} {}LIKE {}",
            expr(inner),
            if *negated { "NOT " } else { "" },
            expr(pattern)
        ),
        Expr::IsNull { expr: inner, negated } => format!(
            "{} IS {}NULL",
            expr(inner),
            if *negated { "NOT " } else { "" }
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parser::parse;

    fn roundtrip(sql: &str) {
        let first = parse(sql).unwrap();
        assert!(!first.degraded, "fixture must parse: {sql}");
        let rendered = serialize(&first);
        let second = parse(&rendered).unwrap();
        assert!(
            first.structurally_equal(&second),
            "round-trip changed structure:\n  input: {sql}\n  rendered: {rendered}"
        );
        // Canonical text is a fixed point.
        assert_eq!(rendered, serialize(&second));
    }

    #[test]
    fn identity_on_already_canonical_text() {
        let ast = parse("SELECT a FROM t").unwrap();
        assert_eq!(serialize(&ast), "SELECT a FROM t");
    }

    #[test]
    fn or_condition_keeps_operator_position() {
        let ast = parse("SELECT a FROM t WHERE p = 1 OR q = 2").unwrap();
        let rendered = serialize(&ast);
        assert!(rendered.contains("p = 1 OR q = 2"));
    }

    #[test]
    fn degraded_ast_serializes_to_raw_verbatim() {
        let raw = "INSERT INTO t VALUES (1)";
        let ast = parse(raw).unwrap();
        assert!(ast.degraded);
        assert_eq!(serialize(&ast), raw);
    }

    #[test]
    fn roundtrip_representative_queries() {
        for sql in [
            "SELECT 1",
            "SELECT * FROM city",
            "SELECT Official_Name FROM city WHERE Population > 1500",
            "select distinct name from t where a = 'x' and b < 3 or c is not null",
            "SELECT T1.name, count(*) FROM stadium AS T1 JOIN concert AS T2 ON T1.id = T2.stadium_id GROUP BY T1.name HAVING count(*) > 1 ORDER BY count(*) DESC LIMIT 5",
            "SELECT name FROM a UNION SELECT name FROM b",
            "SELECT name FROM a INTERSECT SELECT name FROM b EXCEPT SELECT name FROM c",
            "SELECT a FROM (SELECT b AS a FROM u WHERE c = 1) s WHERE a > 2",
            "SELECT a FROM t WHERE x BETWEEN 1 AND 10 AND y NOT LIKE '%q%'",
            "SELECT a FROM t WHERE id IN (SELECT id FROM u)",
            "SELECT a FROM t WHERE id NOT IN (1, 2, 3)",
            "SELECT a FROM t; DROP TABLE t;",
            "SELECT a FROM t WHERE b = 1; SHUTDOWN;",
            "SELECT a FROM t WHERE x > 1 AND 1 = CONVERT(int, (SELECT @@version))",
            "SELECT count(DISTINCT name) FROM t",
            "SELECT \"Quoted Name\" FROM t WHERE \"Other\" = 1",
            "SELECT a FROM t WHERE (p = 1 OR q = 2) AND r = 3",
            "SELECT a, b FROM t ORDER BY a ASC, b DESC LIMIT 2 OFFSET 4",
            "SELECT a FROM t LIMIT 1, 5",
            "SELECT a - 1 + 2 * 3 FROM t WHERE -x < 4",
            "SELECT first || last FROM t",
            "SELECT a FROM t WHERE EXISTS (SELECT 1 FROM u)",
            "SELECT t.* FROM t",
        ] {
            roundtrip(sql);
        }
    }
}
