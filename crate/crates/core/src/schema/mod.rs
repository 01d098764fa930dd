//! Declarative constraint schema: tables, column constraints, keys, row rules,
//! cross-table rules and the null-token policy.
//!
//! A schema is parsed from JSON, then every name and rule expression is
//! resolved and type-checked so that downstream detectors can assume a
//! consistent schema. Parsed schemas are immutable.

pub mod eval;
pub mod expr;

use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use regex::Regex;
use serde::Deserialize;

use crate::smells::SmellParams;
use crate::value::{parse_iso_date, DeclaredType, Value};

pub use eval::{eval_rule, Binding, MapBinding, Scalar, Truth, DEFAULT_TOLERANCE};
pub use expr::{parse_rule_expr, BinaryOp, ColumnRef, Expr, ExprError, ExprErrorKind, Literal, UnaryOp};

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("schema syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("malformed schema: {0}")]
    Malformed(String),
    #[error("unknown table {name:?} referenced by {context}")]
    UnknownTable { name: String, context: String },
    #[error("unknown column {column:?} in table {table:?} referenced by {context}")]
    UnknownColumn { table: String, column: String, context: String },
    #[error("duplicate rule id {id:?} in {scope}")]
    DuplicateRuleId { scope: String, id: String },
    #[error("invalid regular expression for {table}.{column}: {message}")]
    InvalidPattern { table: String, column: String, message: String },
    #[error("rule {rule:?} in table {table:?} uses an aggregate; aggregates are only allowed in cross-table rules")]
    AggregateInRowRule { table: String, rule: String },
    #[error("rule {rule:?}: {source}")]
    Expr {
        rule: String,
        #[source]
        source: ExprError,
    },
    #[error("rule {rule:?} is ill-typed: {message}")]
    Type { rule: String, message: String },
    #[error("column {table}.{column}: {message}")]
    Column { table: String, column: String, message: String },
    #[error("cannot read schema file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Column pattern, implicitly anchored at both ends.
#[derive(Debug, Clone)]
pub struct Pattern {
    source: String,
    regex: Regex,
}

impl Pattern {
    pub fn new(source: &str) -> Result<Self, regex::Error> {
        let regex = Regex::new(&format!("^(?:{source})$"))?;
        Ok(Pattern { source: source.to_string(), regex })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.regex.is_match(text)
    }
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Number(f64),
    Date(chrono::NaiveDate),
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Number(x) => write!(f, "{x}"),
            Bound::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeSpec {
    pub min: Option<Bound>,
    pub max: Option<Bound>,
    pub min_inclusive: bool,
    pub max_inclusive: bool,
}

impl RangeSpec {
    /// `None` when the value is of a kind the bounds do not apply to.
    pub fn contains(&self, value: &Value) -> Option<bool> {
        let below_max = |cmp: std::cmp::Ordering| if self.max_inclusive { cmp.is_le() } else { cmp.is_lt() };
        let above_min = |cmp: std::cmp::Ordering| if self.min_inclusive { cmp.is_ge() } else { cmp.is_gt() };
        let check = |bound: &Option<Bound>, ok: &dyn Fn(std::cmp::Ordering) -> bool| -> Option<bool> {
            match (bound, value) {
                (None, _) => Some(true),
                (Some(Bound::Number(b)), v) => v.as_f64().and_then(|x| x.partial_cmp(b)).map(ok),
                (Some(Bound::Date(b)), Value::Date(d)) => Some(ok(d.cmp(b))),
                _ => None,
            }
        };
        Some(check(&self.min, &above_min)? && check(&self.max, &below_max)?)
    }

    pub fn describe(&self) -> String {
        let lo = match &self.min {
            Some(b) => format!("{}{b}", if self.min_inclusive { "[" } else { "(" }),
            None => "(-inf".to_string(),
        };
        let hi = match &self.max {
            Some(b) => format!("{b}{}", if self.max_inclusive { "]" } else { ")" }),
            None => "+inf)".to_string(),
        };
        format!("{lo}, {hi}")
    }
}

/// Value domain of a column: an interval or a closed set.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Range(RangeSpec),
    Enumeration(Vec<Value>),
}

impl Domain {
    pub fn contains(&self, value: &Value) -> bool {
        match self {
            Domain::Range(r) => r.contains(value).unwrap_or(true),
            Domain::Enumeration(allowed) => allowed.iter().any(|a| a.same_as(value)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Domain::Range(r) => r.describe(),
            Domain::Enumeration(vals) => {
                let items: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
                format!("{{{}}}", items.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnConstraint {
    pub name: String,
    pub declared_type: DeclaredType,
    pub pattern: Option<Pattern>,
    pub domain: Option<Domain>,
    pub required: bool,
    /// Opt-in for syntactic-smell scanning.
    pub label_like: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowRule {
    pub id: String,
    pub source: String,
    pub expr: Expr,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableConstraint {
    pub name: String,
    pub columns: Vec<ColumnConstraint>,
    pub key: Vec<String>,
    pub row_rules: Vec<RowRule>,
    pub baseline_columns: Option<Vec<String>>,
    /// Path of the expected-keys baseline, as written in the schema.
    pub expected_keys: Option<PathBuf>,
}

impl TableConstraint {
    pub fn column(&self, name: &str) -> Option<&ColumnConstraint> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Key columns are required even when not flagged so.
    pub fn is_required(&self, column: &str) -> bool {
        self.column(column).is_some_and(|c| c.required) || self.key.iter().any(|k| k == column)
    }
}

/// `table.column`, or `table.column[*]` to address each element of an id list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnPath {
    pub table: String,
    pub column: String,
    pub each_element: bool,
}

impl ColumnPath {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let (body, each_element) = match text.strip_suffix("[*]") {
            Some(body) => (body, true),
            None => (text, false),
        };
        match body.split_once('.') {
            Some((table, column)) if !table.is_empty() && !column.is_empty() => Ok(ColumnPath {
                table: table.to_string(),
                column: column.to_string(),
                each_element,
            }),
            _ => Err(SchemaError::Malformed(format!("column path {text:?} is not of the form table.column"))),
        }
    }
}

impl fmt::Display for ColumnPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}{}", self.table, self.column, if self.each_element { "[*]" } else { "" })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CrossTableKind {
    /// Every from-value (or list element) must exist in the to-column.
    Reference,
    /// Boolean expression over the from-row and the rows joined through
    /// `from -> to`.
    Expression { source: String, expr: Expr, tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossTableRule {
    pub id: String,
    pub from: ColumnPath,
    pub to: ColumnPath,
    pub kind: CrossTableKind,
}

/// Raw cell values treated as absent. Matching is exact and case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NullPolicy {
    tokens: Vec<String>,
}

impl NullPolicy {
    pub fn new(tokens: Vec<String>) -> Result<Self, SchemaError> {
        if tokens.is_empty() {
            return Err(SchemaError::Malformed("null_tokens must not be empty".into()));
        }
        for (i, t) in tokens.iter().enumerate() {
            if tokens[..i].contains(t) {
                return Err(SchemaError::Malformed(format!("null token {t:?} listed twice")));
            }
        }
        Ok(NullPolicy { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_null(&self, raw: &str) -> bool {
        self.tokens.iter().any(|t| t == raw)
    }
}

impl Default for NullPolicy {
    fn default() -> Self {
        NullPolicy { tokens: ["", "NULL", "null", "NaN", "N/A"].map(String::from).to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSchema {
    pub tables: Vec<TableConstraint>,
    pub cross_table: Vec<CrossTableRule>,
    pub null_policy: NullPolicy,
    pub smell_params: Option<SmellParams>,
    /// Directory relative paths in the schema are resolved against.
    pub base_dir: Option<PathBuf>,
}

impl ConstraintSchema {
    pub fn table(&self, name: &str) -> Option<&TableConstraint> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn resolve_path(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn reference_rules(&self) -> impl Iterator<Item = &CrossTableRule> {
        self.cross_table.iter().filter(|r| matches!(r.kind, CrossTableKind::Reference))
    }
}

// ---------------------------------------------------------------------------
// JSON surface
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    #[serde(default)]
    tables: IndexMap<String, RawTable>,
    #[serde(default)]
    cross_table: Vec<RawCross>,
    null_tokens: Option<Vec<String>>,
    smell_params: Option<SmellParams>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    #[serde(default)]
    columns: IndexMap<String, RawColumn>,
    #[serde(default)]
    key: Vec<String>,
    #[serde(default)]
    rules: Vec<RawRule>,
    baseline_columns: Option<Vec<String>>,
    expected_keys: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawColumn {
    #[serde(rename = "type")]
    ty: String,
    pattern: Option<String>,
    range: Option<RawRange>,
    #[serde(rename = "enum")]
    enumeration: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    required: bool,
    #[serde(default)]
    label_like: bool,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    min: Option<serde_json::Value>,
    max: Option<serde_json::Value>,
    #[serde(default = "yes")]
    min_inclusive: bool,
    #[serde(default = "yes")]
    max_inclusive: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    id: String,
    expr: String,
    tolerance: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCross {
    id: String,
    kind: String,
    from: String,
    to: Option<String>,
    expr: Option<String>,
    tolerance: Option<f64>,
}

/// Parses and fully resolves a JSON constraint schema.
pub fn parse_schema(schema_text: &str) -> Result<ConstraintSchema, SchemaError> {
    let raw: RawSchema = serde_json::from_str(schema_text).map_err(|e| SchemaError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let null_policy = match raw.null_tokens {
        Some(tokens) => NullPolicy::new(tokens)?,
        None => NullPolicy::default(),
    };
    if let Some(params) = &raw.smell_params {
        params.validate().map_err(SchemaError::Malformed)?;
    }

    let mut tables = Vec::with_capacity(raw.tables.len());
    for (name, raw_table) in raw.tables {
        tables.push(build_table(name, raw_table)?);
    }

    let mut schema = ConstraintSchema {
        tables,
        cross_table: Vec::new(),
        null_policy,
        smell_params: raw.smell_params,
        base_dir: None,
    };

    for raw_rule in raw.cross_table {
        let rule = build_cross_rule(&schema, raw_rule)?;
        if schema.cross_table.iter().any(|r| r.id == rule.id) {
            return Err(SchemaError::DuplicateRuleId { scope: "cross_table".into(), id: rule.id });
        }
        schema.cross_table.push(rule);
    }

    for table in &schema.tables {
        for col in table.columns.iter().filter(|c| c.declared_type == DeclaredType::IdList) {
            let referenced = schema
                .reference_rules()
                .any(|r| r.from.table == table.name && r.from.column == col.name && r.from.each_element);
            if !referenced {
                return Err(SchemaError::Column {
                    table: table.name.clone(),
                    column: col.name.clone(),
                    message: "id_list columns need a cross-table reference rule from table.column[*]".into(),
                });
            }
        }
    }
    Ok(schema)
}

/// Reads and parses a schema file; relative paths inside it resolve against
/// the file's directory.
pub fn parse_schema_file(path: &Path) -> Result<ConstraintSchema, SchemaError> {
    let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io { path: path.to_path_buf(), source })?;
    let mut schema = parse_schema(&text)?;
    schema.base_dir = path.parent().map(Path::to_path_buf);
    Ok(schema)
}

fn check_tolerance(rule: &str, tolerance: Option<f64>) -> Result<f64, SchemaError> {
    let tol = tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if !tol.is_finite() || tol < 0.0 {
        return Err(SchemaError::Malformed(format!("rule {rule:?} has a negative or non-finite tolerance")));
    }
    Ok(tol)
}

fn json_scalar_text(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn build_bound(
    table: &str,
    column: &str,
    ty: DeclaredType,
    v: &serde_json::Value,
) -> Result<Bound, SchemaError> {
    let err = |message: String| SchemaError::Column { table: table.into(), column: column.into(), message };
    match (ty, v) {
        (DeclaredType::Integer | DeclaredType::Float, serde_json::Value::Number(n)) => n
            .as_f64()
            .filter(|x| x.is_finite())
            .map(Bound::Number)
            .ok_or_else(|| err(format!("range bound {n} is not finite"))),
        (DeclaredType::Date, serde_json::Value::String(s)) => {
            parse_iso_date(s).map(Bound::Date).ok_or_else(|| err(format!("range bound {s:?} is not an ISO date")))
        }
        (ty, v) => Err(err(format!("range bound {v} does not fit a {ty} column"))),
    }
}

fn build_column(table: &str, name: String, raw: RawColumn) -> Result<ColumnConstraint, SchemaError> {
    let col_err = |message: String| SchemaError::Column { table: table.into(), column: name.clone(), message };
    let declared_type: DeclaredType = raw.ty.parse().map_err(col_err)?;

    let pattern = match &raw.pattern {
        Some(src) => Some(Pattern::new(src).map_err(|e| SchemaError::InvalidPattern {
            table: table.into(),
            column: name.clone(),
            message: e.to_string(),
        })?),
        None => None,
    };

    let domain = match (raw.range, raw.enumeration) {
        (Some(_), Some(_)) => return Err(col_err("declare either range or enum, not both".into())),
        (Some(range), None) => {
            let min = range.min.as_ref().map(|v| build_bound(table, &name, declared_type, v)).transpose()?;
            let max = range.max.as_ref().map(|v| build_bound(table, &name, declared_type, v)).transpose()?;
            if let (Some(lo), Some(hi)) = (&min, &max) {
                let ordered = match (lo, hi) {
                    (Bound::Number(a), Bound::Number(b)) => a <= b,
                    (Bound::Date(a), Bound::Date(b)) => a <= b,
                    _ => false,
                };
                if !ordered {
                    return Err(col_err(format!("range min {lo} exceeds max {hi}")));
                }
            }
            Some(Domain::Range(RangeSpec {
                min,
                max,
                min_inclusive: range.min_inclusive,
                max_inclusive: range.max_inclusive,
            }))
        }
        (None, Some(items)) => {
            if items.is_empty() {
                return Err(col_err("enum must not be empty".into()));
            }
            let mut values: Vec<Value> = Vec::with_capacity(items.len());
            for item in &items {
                let text = json_scalar_text(item).ok_or_else(|| col_err(format!("enum entry {item} is not a scalar")))?;
                let value = declared_type.parse(&text).map_err(|m| col_err(format!("enum entry: {m}")))?;
                if values.iter().any(|v| v.same_as(&value)) {
                    return Err(col_err(format!("enum entry {text:?} listed twice")));
                }
                values.push(value);
            }
            Some(Domain::Enumeration(values))
        }
        (None, None) => None,
    };

    Ok(ColumnConstraint {
        name,
        declared_type,
        pattern,
        domain,
        required: raw.required,
        label_like: raw.label_like,
    })
}

fn build_table(name: String, raw: RawTable) -> Result<TableConstraint, SchemaError> {
    let mut columns = Vec::with_capacity(raw.columns.len());
    for (col_name, raw_col) in raw.columns {
        columns.push(build_column(&name, col_name, raw_col)?);
    }
    let mut table = TableConstraint {
        name,
        columns,
        key: raw.key,
        row_rules: Vec::new(),
        baseline_columns: raw.baseline_columns,
        expected_keys: raw.expected_keys.map(PathBuf::from),
    };

    for (i, k) in table.key.iter().enumerate() {
        if table.column(k).is_none() {
            return Err(SchemaError::UnknownColumn {
                table: table.name.clone(),
                column: k.clone(),
                context: "key".into(),
            });
        }
        if table.key[..i].contains(k) {
            return Err(SchemaError::Malformed(format!("key column {k:?} listed twice in {}", table.name)));
        }
    }
    if table.expected_keys.is_some() && table.key.is_empty() {
        return Err(SchemaError::Malformed(format!(
            "table {:?} declares expected_keys but no key",
            table.name
        )));
    }

    for raw_rule in raw.rules {
        if table.row_rules.iter().any(|r| r.id == raw_rule.id) {
            return Err(SchemaError::DuplicateRuleId { scope: format!("table {}", table.name), id: raw_rule.id });
        }
        let expr = parse_rule_expr(&raw_rule.expr)
            .map_err(|source| SchemaError::Expr { rule: raw_rule.id.clone(), source })?;
        if expr.contains_aggregate() {
            return Err(SchemaError::AggregateInRowRule { table: table.name.clone(), rule: raw_rule.id });
        }
        let tolerance = check_tolerance(&raw_rule.id, raw_rule.tolerance)?;
        let scope = ResolveScope::Row { table: &table };
        expect_bool(&raw_rule.id, resolve(&expr, &scope, &raw_rule.id, false)?)?;
        table.row_rules.push(RowRule { id: raw_rule.id, source: raw_rule.expr, expr, tolerance });
    }
    Ok(table)
}

fn lookup_path<'a>(
    schema: &'a ConstraintSchema,
    path: &ColumnPath,
    context: &str,
) -> Result<(&'a TableConstraint, &'a ColumnConstraint), SchemaError> {
    let table = schema
        .table(&path.table)
        .ok_or_else(|| SchemaError::UnknownTable { name: path.table.clone(), context: context.into() })?;
    let column = table.column(&path.column).ok_or_else(|| SchemaError::UnknownColumn {
        table: path.table.clone(),
        column: path.column.clone(),
        context: context.into(),
    })?;
    Ok((table, column))
}

fn build_cross_rule(schema: &ConstraintSchema, raw: RawCross) -> Result<CrossTableRule, SchemaError> {
    let context = format!("cross_table rule {:?}", raw.id);
    let from = ColumnPath::parse(&raw.from)?;
    let to_text = raw
        .to
        .as_deref()
        .ok_or_else(|| SchemaError::Malformed(format!("{context} needs a \"to\" column")))?;
    let to = ColumnPath::parse(to_text)?;
    if to.each_element {
        return Err(SchemaError::Malformed(format!("{context}: \"to\" cannot address list elements")));
    }
    let (from_table, from_col) = lookup_path(schema, &from, &context)?;
    let (to_table, _) = lookup_path(schema, &to, &context)?;
    if from.each_element != (from_col.declared_type == DeclaredType::IdList) {
        return Err(SchemaError::Malformed(format!(
            "{context}: [*] must be used exactly when the from-column is an id_list"
        )));
    }
    if !to_table.key.contains(&to.column) {
        return Err(SchemaError::Malformed(format!("{context}: {to} is not a key column")));
    }

    let kind = match raw.kind.as_str() {
        "reference" => {
            if raw.expr.is_some() {
                return Err(SchemaError::Malformed(format!("{context}: reference rules take no expr")));
            }
            CrossTableKind::Reference
        }
        "expression" => {
            let source = raw
                .expr
                .ok_or_else(|| SchemaError::Malformed(format!("{context}: expression rules need an expr")))?;
            let expr = parse_rule_expr(&source).map_err(|e| SchemaError::Expr { rule: raw.id.clone(), source: e })?;
            let tolerance = check_tolerance(&raw.id, raw.tolerance)?;
            let scope = ResolveScope::Cross { host: from_table, joined: to_table, scalar_join: !from.each_element };
            expect_bool(&raw.id, resolve(&expr, &scope, &raw.id, false)?)?;
            CrossTableKind::Expression { source, expr, tolerance }
        }
        other => {
            return Err(SchemaError::Malformed(format!(
                "{context}: kind must be \"reference\" or \"expression\", not {other:?}"
            )))
        }
    };
    Ok(CrossTableRule { id: raw.id, from, to, kind })
}

// ---------------------------------------------------------------------------
// Name resolution and type checking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Number,
    Text,
    Bool,
    Date,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Number => "number",
            Kind::Text => "text",
            Kind::Bool => "boolean",
            Kind::Date => "date",
        })
    }
}

enum ResolveScope<'a> {
    Row { table: &'a TableConstraint },
    Cross { host: &'a TableConstraint, joined: &'a TableConstraint, scalar_join: bool },
}

fn column_kind(table: &TableConstraint, column: &str, rule: &str) -> Result<Kind, SchemaError> {
    let col = table.column(column).ok_or_else(|| SchemaError::UnknownColumn {
        table: table.name.clone(),
        column: column.to_string(),
        context: format!("rule {rule:?}"),
    })?;
    match col.declared_type {
        DeclaredType::Integer | DeclaredType::Float => Ok(Kind::Number),
        DeclaredType::Text => Ok(Kind::Text),
        DeclaredType::Boolean => Ok(Kind::Bool),
        DeclaredType::Date => Ok(Kind::Date),
        DeclaredType::IdList => Err(SchemaError::Type {
            rule: rule.into(),
            message: format!("id_list column {column:?} cannot appear in an expression"),
        }),
    }
}

fn resolve_ref(scope: &ResolveScope<'_>, c: &ColumnRef, rule: &str, in_sum: bool) -> Result<Kind, SchemaError> {
    let unknown_table = |name: &str| SchemaError::UnknownTable { name: name.into(), context: format!("rule {rule:?}") };
    match scope {
        ResolveScope::Row { table } => match &c.table {
            Some(t) if t != &table.name => Err(unknown_table(t)),
            _ => column_kind(table, &c.column, rule),
        },
        ResolveScope::Cross { host, joined, scalar_join } => {
            let (target, is_joined) = match (&c.table, in_sum) {
                (None, false) => (host, false),
                (None, true) => (joined, true),
                (Some(t), _) if t == &joined.name => (joined, true),
                (Some(t), false) if t == &host.name => (host, false),
                (Some(t), true) if t == &host.name => {
                    return Err(SchemaError::Type {
                        rule: rule.into(),
                        message: format!("sum() ranges over joined rows of {:?}, not {t:?}", joined.name),
                    })
                }
                (Some(t), _) => return Err(unknown_table(t)),
            };
            if is_joined && !in_sum && !scalar_join {
                return Err(SchemaError::Type {
                    rule: rule.into(),
                    message: format!("{c} joins through a list; wrap it in sum()"),
                });
            }
            column_kind(target, &c.column, rule)
        }
    }
}

fn resolve(expr: &Expr, scope: &ResolveScope<'_>, rule: &str, in_sum: bool) -> Result<Kind, SchemaError> {
    let type_err = |message: String| SchemaError::Type { rule: rule.into(), message };
    match expr {
        Expr::Column(c) => resolve_ref(scope, c, rule, in_sum),
        Expr::Sum(c) => {
            if matches!(scope, ResolveScope::Row { .. }) {
                return Err(type_err("sum() is only available in cross-table rules".into()));
            }
            match resolve_ref(scope, c, rule, true)? {
                Kind::Number => Ok(Kind::Number),
                k => Err(type_err(format!("sum({c}) needs a numeric column, found {k}"))),
            }
        }
        Expr::Literal(l) => Ok(match l {
            Literal::Int(_) | Literal::Float(_) => Kind::Number,
            Literal::Text(_) => Kind::Text,
            Literal::Bool(_) => Kind::Bool,
        }),
        Expr::Unary(op, e) => {
            let k = resolve(e, scope, rule, in_sum)?;
            match (op, k) {
                (UnaryOp::Not, Kind::Bool) => Ok(Kind::Bool),
                (UnaryOp::Neg, Kind::Number) => Ok(Kind::Number),
                (UnaryOp::Not, k) => Err(type_err(format!("'not' applied to {k}"))),
                (UnaryOp::Neg, k) => Err(type_err(format!("'-' applied to {k}"))),
            }
        }
        Expr::Binary(op, l, r) => {
            let lk = resolve(l, scope, rule, in_sum)?;
            let rk = resolve(r, scope, rule, in_sum)?;
            if op.is_arithmetic() {
                if lk == Kind::Number && rk == Kind::Number {
                    Ok(Kind::Number)
                } else {
                    Err(type_err(format!("'{}' over {lk} and {rk}", op.symbol())))
                }
            } else if op.is_logical() {
                if lk == Kind::Bool && rk == Kind::Bool {
                    Ok(Kind::Bool)
                } else {
                    Err(type_err(format!("'{}' over {lk} and {rk}", op.symbol())))
                }
            } else if lk != rk {
                Err(type_err(format!("'{}' compares {lk} with {rk}", op.symbol())))
            } else if lk == Kind::Bool && !matches!(op, BinaryOp::Eq | BinaryOp::Ne) {
                Err(type_err(format!("'{}' does not order booleans", op.symbol())))
            } else {
                Ok(Kind::Bool)
            }
        }
    }
}

fn expect_bool(rule: &str, kind: Kind) -> Result<(), SchemaError> {
    if kind == Kind::Bool {
        Ok(())
    } else {
        Err(SchemaError::Type { rule: rule.into(), message: format!("rule evaluates to {kind}, not boolean") })
    }
}
