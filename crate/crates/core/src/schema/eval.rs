//! Tri-state evaluation of rule expressions over a row binding.

use chrono::NaiveDate;

use super::expr::{BinaryOp, ColumnRef, Expr, Literal, UnaryOp};
use crate::value::Value;

/// Default absolute tolerance for numeric `==` / `!=` (currency scale).
pub const DEFAULT_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truth {
    Holds,
    Violated,
    /// Some referenced value was absent or unparsable.
    Unknown,
}

/// A scalar as seen by the evaluator; integers and floats collapse to numbers.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Number(f64),
    Text(String),
    Bool(bool),
    Date(NaiveDate),
}

impl Scalar {
    pub fn from_value(value: &Value) -> Option<Scalar> {
        match value {
            Value::Integer(i) => Some(Scalar::Number(*i as f64)),
            Value::Float(x) => Some(Scalar::Number(*x)),
            Value::Text(s) => Some(Scalar::Text(s.clone())),
            Value::Boolean(b) => Some(Scalar::Bool(*b)),
            Value::Date(d) => Some(Scalar::Date(*d)),
            Value::IdList(_) => None,
        }
    }
}

/// Supplies values for the column references of an expression.
/// `None` means absent (null, unparsable, or unjoinable).
pub trait Binding {
    fn value(&self, column: &ColumnRef) -> Option<Scalar>;

    /// Sum of `column` over joined rows. Row bindings have no joined rows.
    fn sum(&self, _column: &ColumnRef) -> Option<f64> {
        None
    }
}

/// Simple name-keyed binding, handy for tests and ad-hoc evaluation.
/// Keys are bare column names or `table.column`.
#[derive(Debug, Clone, Default)]
pub struct MapBinding {
    pub values: std::collections::HashMap<String, Option<Scalar>>,
    pub sums: std::collections::HashMap<String, Option<f64>>,
}

impl MapBinding {
    pub fn with(mut self, name: &str, value: Option<Scalar>) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn with_sum(mut self, name: &str, value: Option<f64>) -> Self {
        self.sums.insert(name.to_string(), value);
        self
    }

    fn key(column: &ColumnRef) -> String {
        match &column.table {
            Some(t) => format!("{t}.{}", column.column),
            None => column.column.clone(),
        }
    }
}

impl Binding for MapBinding {
    fn value(&self, column: &ColumnRef) -> Option<Scalar> {
        self.values.get(&Self::key(column)).cloned().flatten()
    }

    fn sum(&self, column: &ColumnRef) -> Option<f64> {
        self.sums.get(&Self::key(column)).copied().flatten()
    }
}

/// Evaluates a boolean rule. Evaluation is strict: every operand is
/// evaluated, so any absent reference makes the whole rule `Unknown`.
pub fn eval_rule(expr: &Expr, binding: &dyn Binding, tolerance: f64) -> Truth {
    match eval(expr, binding, tolerance) {
        Some(Scalar::Bool(true)) => Truth::Holds,
        Some(Scalar::Bool(false)) => Truth::Violated,
        _ => Truth::Unknown,
    }
}

/// Evaluates any (sub)expression to a scalar; `None` when some input is absent.
pub fn eval(expr: &Expr, binding: &dyn Binding, tolerance: f64) -> Option<Scalar> {
    match expr {
        Expr::Column(c) => binding.value(c),
        Expr::Sum(c) => binding.sum(c).map(Scalar::Number),
        Expr::Literal(lit) => Some(match lit {
            Literal::Int(i) => Scalar::Number(*i as f64),
            Literal::Float(x) => Scalar::Number(*x),
            Literal::Text(s) => Scalar::Text(s.clone()),
            Literal::Bool(b) => Scalar::Bool(*b),
        }),
        Expr::Unary(op, operand) => {
            let v = eval(operand, binding, tolerance)?;
            match (op, v) {
                (UnaryOp::Not, Scalar::Bool(b)) => Some(Scalar::Bool(!b)),
                (UnaryOp::Neg, Scalar::Number(x)) => Some(Scalar::Number(-x)),
                _ => None,
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            let l = eval(lhs, binding, tolerance);
            let r = eval(rhs, binding, tolerance);
            apply(*op, l?, r?, tolerance)
        }
    }
}

fn apply(op: BinaryOp, l: Scalar, r: Scalar, tolerance: f64) -> Option<Scalar> {
    use Scalar::*;
    let result = match (op, l, r) {
        (BinaryOp::Add, Number(a), Number(b)) => Number(a + b),
        (BinaryOp::Sub, Number(a), Number(b)) => Number(a - b),
        (BinaryOp::Mul, Number(a), Number(b)) => Number(a * b),
        (BinaryOp::Div, Number(a), Number(b)) => Number(a / b),
        (BinaryOp::And, Bool(a), Bool(b)) => Bool(a && b),
        (BinaryOp::Or, Bool(a), Bool(b)) => Bool(a || b),
        (BinaryOp::Eq, Number(a), Number(b)) => Bool((a - b).abs() <= tolerance),
        (BinaryOp::Ne, Number(a), Number(b)) => Bool((a - b).abs() > tolerance),
        (BinaryOp::Eq, a, b) => Bool(a == b),
        (BinaryOp::Ne, a, b) => Bool(a != b),
        (op, a, b) if op.is_comparison() => {
            let ordering = match (a, b) {
                (Number(a), Number(b)) => a.partial_cmp(&b),
                (Text(a), Text(b)) => Some(a.cmp(&b)),
                (Date(a), Date(b)) => Some(a.cmp(&b)),
                _ => None,
            };
            // NaN from a zero division orders against nothing: comparison is false.
            let Some(ord) = ordering else { return Some(Bool(false)) };
            Bool(match op {
                BinaryOp::Lt => ord.is_lt(),
                BinaryOp::Le => ord.is_le(),
                BinaryOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            })
        }
        _ => return None,
    };
    Some(result)
}
