//! Constant folding over literal-only expressions. Used by the static
//! detector to prove that a disjunct is always true (including non-literal
//! renderings such as `CONCAT('ci', 'ty') = 'city'`) without executing the
//! query, and by tests as an independent oracle for always-true payload
//! fragments.
//!
//! Folding is strict: any subexpression that cannot be proven constant
//! makes the whole fold return `None`. String semantics match the
//! execution shims (CONCAT and `||` are string concatenation).

use crate::sql::ast::{BinOp, Expr, Literal, UnaryOp};

#[derive(Debug, Clone, PartialEq)]
pub enum FoldValue {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Null,
}

impl FoldValue {
    fn as_number(&self) -> Option<f64> {
        match self {
            FoldValue::Int(i) => Some(*i as f64),
            FoldValue::Float(f) => Some(*f),
            _ => None,
        }
    }
}

pub fn fold(expr: &Expr) -> Option<FoldValue> {
    match expr {
        Expr::Literal(Literal::Number(text)) => {
            if let Ok(i) = text.parse::<i64>() {
                Some(FoldValue::Int(i))
            } else {
                text.parse::<f64>().ok().map(FoldValue::Float)
            }
        }
        Expr::Literal(Literal::String(s)) => Some(FoldValue::Str(s.clone())),
        Expr::Literal(Literal::Null) => Some(FoldValue::Null),
        Expr::Paren(inner) => fold(inner),
        Expr::Unary { op, expr: inner } => {
            let v = fold(inner)?;
            match (op, v) {
                (UnaryOp::Neg, FoldValue::Int(i)) => Some(FoldValue::Int(-i)),
                (UnaryOp::Neg, FoldValue::Float(f)) => Some(FoldValue::Float(-f)),
                (UnaryOp::Plus, v @ (FoldValue::Int(_) | FoldValue::Float(_))) => Some(v),
                (UnaryOp::Not, FoldValue::Bool(b)) => Some(FoldValue::Bool(!b)),
                _ => None,
            }
        }
        Expr::Binary { left, op, right } => {
            let l = fold(left)?;
            let r = fold(right)?;
            fold_binary(&l, *op, &r)
        }
        Expr::FunctionCall {
            name,
            distinct: false,
            star: false,
            args,
        } if name.name == "concat" => {
            let mut out = String::new();
            for arg in args {
                match fold(arg)? {
                    FoldValue::Str(s) => out.push_str(&s),
                    FoldValue::Int(i) => out.push_str(&i.to_string()),
                    _ => return None,
                }
            }
            Some(FoldValue::Str(out))
        }
        _ => None,
    }
}

fn fold_binary(l: &FoldValue, op: BinOp, r: &FoldValue) -> Option<FoldValue> {
    use FoldValue::*;
    match op {
        BinOp::And => match (l, r) {
            (Bool(a), Bool(b)) => Some(Bool(*a && *b)),
            _ => None,
        },
        BinOp::Or => match (l, r) {
            (Bool(a), Bool(b)) => Some(Bool(*a || *b)),
            _ => None,
        },
        BinOp::Concat => match (l, r) {
            (Str(a), Str(b)) => Some(Str(format!("{a}{b}"))),
            _ => None,
        },
        BinOp::Eq | BinOp::NotEq | BinOp::Lt | BinOp::LtEq | BinOp::Gt | BinOp::GtEq => {
            let ordering = compare(l, r)?;
            let result = match op {
                BinOp::Eq => ordering == std::cmp::Ordering::Equal,
                BinOp::NotEq => ordering != std::cmp::Ordering::Equal,
                BinOp::Lt => ordering == std::cmp::Ordering::Less,
                BinOp::LtEq => ordering != std::cmp::Ordering::Greater,
                BinOp::Gt => ordering == std::cmp::Ordering::Greater,
                BinOp::GtEq => ordering != std::cmp::Ordering::Less,
                _ => unreachable!(),
            };
            Some(Bool(result))
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
            let a = l.as_number()?;
            let b = r.as_number()?;
            let out = match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return None;
                    }
                    a / b
                }
                BinOp::Mod => {
                    if b == 0.0 {
                        return None;
                    }
                    a % b
                }
                _ => unreachable!(),
            };
            match (l, r) {
                (Int(_), Int(_)) if out.fract() == 0.0 => Some(Int(out as i64)),
                _ => Some(Float(out)),
            }
        }
    }
}

fn compare(l: &FoldValue, r: &FoldValue) -> Option<std::cmp::Ordering> {
    use FoldValue::*;
    match (l, r) {
        (Str(a), Str(b)) => Some(a.cmp(b)),
        (Null, _) | (_, Null) => None, // comparisons with NULL are unknown
        _ => {
            let a = l.as_number()?;
            let b = r.as_number()?;
            a.partial_cmp(&b)
        }
    }
}

/// True iff the expression provably evaluates to true on every row.
pub fn folds_to_true(expr: &Expr) -> bool {
    matches!(fold(expr), Some(FoldValue::Bool(true)))
}

/// Flatten an OR chain into its disjuncts, looking through parentheses.
pub fn or_disjuncts(expr: &Expr) -> Vec<&Expr> {
    fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
        match e {
            Expr::Binary {
                left,
                op: BinOp::Or,
                right,
            } => {
                walk(left, out);
                walk(right, out);
            }
            Expr::Paren(inner) => walk(inner, out),
            other => out.push(other),
        }
    }
    let mut out = Vec::new();
    walk(expr, &mut out);
    out
}
