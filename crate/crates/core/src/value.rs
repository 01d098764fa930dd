//! Typed cell values and the lexical forms accepted for each declared type.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Column type declared in a constraint schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclaredType {
    Integer,
    Float,
    Text,
    Boolean,
    Date,
    IdList,
}

impl DeclaredType {
    pub fn is_numeric(self) -> bool {
        matches!(self, DeclaredType::Integer | DeclaredType::Float)
    }

    /// Parses `raw` under this type. The error string explains the mismatch
    /// and ends up as evidence on an invalid-type issue.
    pub fn parse(self, raw: &str) -> Result<Value, String> {
        match self {
            DeclaredType::Integer => {
                if !is_integer_form(raw) {
                    return Err(format!("{raw:?} is not an integer"));
                }
                raw.parse::<i64>()
                    .map(Value::Integer)
                    .map_err(|_| format!("{raw:?} overflows a 64-bit integer"))
            }
            DeclaredType::Float => {
                if !(is_integer_form(raw) || is_float_form(raw)) {
                    return Err(format!("{raw:?} is not a number"));
                }
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Value::Float)
                    .ok_or_else(|| format!("{raw:?} is not a finite number"))
            }
            DeclaredType::Text => Ok(Value::Text(raw.to_string())),
            DeclaredType::Boolean => parse_boolean(raw)
                .map(Value::Boolean)
                .ok_or_else(|| format!("{raw:?} is not a boolean")),
            DeclaredType::Date => {
                parse_iso_date(raw).map(Value::Date).ok_or_else(|| format!("{raw:?} is not an ISO-8601 date"))
            }
            DeclaredType::IdList => {
                let items: Vec<String> = raw.split(';').map(str::to_string).collect();
                if items.iter().any(String::is_empty) {
                    return Err(format!("{raw:?} has an empty list element"));
                }
                Ok(Value::IdList(items))
            }
        }
    }
}

impl fmt::Display for DeclaredType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DeclaredType::Integer => "integer",
            DeclaredType::Float => "float",
            DeclaredType::Text => "text",
            DeclaredType::Boolean => "boolean",
            DeclaredType::Date => "date",
            DeclaredType::IdList => "id_list",
        };
        f.write_str(s)
    }
}

impl FromStr for DeclaredType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "integer" => Ok(DeclaredType::Integer),
            "float" => Ok(DeclaredType::Float),
            "text" => Ok(DeclaredType::Text),
            "boolean" => Ok(DeclaredType::Boolean),
            "date" => Ok(DeclaredType::Date),
            "id_list" => Ok(DeclaredType::IdList),
            other => Err(format!("unknown column type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Integer(i64),
    Float(f64),
    Text(String),
    Boolean(bool),
    Date(NaiveDate),
    IdList(Vec<String>),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Equality used for enumeration membership: numbers compare by value.
    pub fn same_as(&self, other: &Value) -> bool {
        match (self.as_f64(), other.as_f64()) {
            (Some(a), Some(b)) => a == b,
            _ => self == other,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Integer(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Text(s) => f.write_str(s),
            Value::Boolean(b) => write!(f, "{b}"),
            Value::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            Value::IdList(items) => f.write_str(&items.join(";")),
        }
    }
}

/// Optional sign followed by one or more ASCII digits.
pub fn is_integer_form(raw: &str) -> bool {
    let digits = raw.strip_prefix(['+', '-']).unwrap_or(raw);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// Decimal (`1.5`, `.5`, `5.`) or exponent (`1e3`, `2.5E-4`) form. Plain
/// integers are excluded; `inf`/`nan` spellings are not numbers here.
pub fn is_float_form(raw: &str) -> bool {
    let body = raw.strip_prefix(['+', '-']).unwrap_or(raw);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], Some(&mantissa[i + 1..])),
        None => (mantissa, None),
    };
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) {
        return false;
    }
    let frac_ok = match frac_part {
        Some(frac) => all_digits(frac) && !(int_part.is_empty() && frac.is_empty()),
        None => !int_part.is_empty(),
    };
    if !frac_ok {
        return false;
    }
    match exponent {
        Some(exp) => {
            let digits = exp.strip_prefix(['+', '-']).unwrap_or(exp);
            !digits.is_empty() && all_digits(digits)
        }
        None => frac_part.is_some(),
    }
}

pub fn parse_boolean(raw: &str) -> Option<bool> {
    if raw.eq_ignore_ascii_case("true") {
        Some(true)
    } else if raw.eq_ignore_ascii_case("false") {
        Some(false)
    } else {
        None
    }
}

/// `YYYY-MM-DD` calendar dates only.
pub fn parse_iso_date(raw: &str) -> Option<NaiveDate> {
    let b = raw.as_bytes();
    let shape_ok = b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter().enumerate().all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit());
    if !shape_ok {
        return None;
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d").ok()
}
