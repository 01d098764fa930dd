//! Integrity-issue detection: missing, invalid, duplicate and conflicting data,
//! each reported at the scope where it lives.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ingest::{Cell, CellContent, Dataset, Table};
use crate::schema::{
    eval_rule, Binding, ColumnRef, ConstraintSchema, CrossTableKind, CrossTableRule, Expr, Scalar,
    TableConstraint, Truth,
};
use crate::taxonomy::{Attribute, OutcomeLabel, Scope, ViolatedKind};
use crate::value::{DeclaredType, Value};

/// Constraint tag for a required cell that is null.
pub const REQUIRED: &str = "required";
/// Constraint tag for a key listed in the expected-keys baseline but absent.
pub const EXPECTED_KEYS: &str = "expected_keys";
/// Constraint tag for fully identical rows sharing a key.
pub const DUPLICATE_KEY: &str = "duplicate_key";
/// Constraint tag for key-sharing rows that disagree elsewhere.
pub const KEY_CONFLICT: &str = "key_conflict";
/// Constraint tag for header columns diverging from the declared baseline.
pub const BASELINE: &str = "baseline";

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("cannot read expected keys for table {table} from {path}: {source}")]
    ExpectedKeys {
        table: String,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset has no table {0:?} required by the schema")]
    MissingTable(String),
}

/// One integrity finding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub id: String,
    pub tables: Vec<String>,
    pub rows: Vec<usize>,
    pub columns: Vec<String>,
    pub scope: Scope,
    pub attribute: Attribute,
    /// Filled by [`crate::classify`].
    pub outcome: Option<OutcomeLabel>,
    #[serde(rename = "constraint")]
    pub violated_constraint: String,
    pub evidence: String,
    /// Which cell check fired; present exactly for invalid issues.
    #[serde(skip)]
    pub violated_kind: Option<ViolatedKind>,
}

struct IssueDraft<'a> {
    tables: Vec<String>,
    rows: Vec<usize>,
    columns: Vec<String>,
    scope: Scope,
    attribute: Attribute,
    constraint: &'a str,
    violated_kind: Option<ViolatedKind>,
    evidence: String,
    /// Extra location detail that distinguishes otherwise equal locations.
    detail: String,
}

impl IssueDraft<'_> {
    fn build(self) -> Issue {
        let location = format!("{:?}|{:?}|{}", self.rows, self.columns, self.detail);
        let digest = Sha256::digest(location.as_bytes());
        let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        Issue {
            id: format!("{}:{}:{hex}", self.tables.join("+"), self.constraint),
            tables: self.tables,
            rows: self.rows,
            columns: self.columns,
            scope: self.scope,
            attribute: self.attribute,
            outcome: None,
            violated_constraint: self.constraint.to_string(),
            evidence: self.evidence,
            violated_kind: self.violated_kind,
        }
    }
}

/// Sorts by (table, first row, columns, constraint), ties broken by id.
pub fn sort_issues(issues: &mut [Issue]) {
    issues.sort_by(|a, b| {
        (&a.tables, a.rows.first(), &a.columns, &a.violated_constraint, &a.id).cmp(&(
            &b.tables,
            b.rows.first(),
            &b.columns,
            &b.violated_constraint,
            &b.id,
        ))
    });
}

fn bound_tables<'a>(
    dataset: &'a Dataset,
    schema: &'a ConstraintSchema,
) -> Result<Vec<(&'a TableConstraint, &'a Table)>, DetectError> {
    schema
        .tables
        .iter()
        .map(|tc| {
            dataset
                .table(&tc.name)
                .map(|t| (tc, t))
                .ok_or_else(|| DetectError::MissingTable(tc.name.clone()))
        })
        .collect()
}

fn key_indices(table: &Table, tc: &TableConstraint) -> Vec<usize> {
    tc.key.iter().filter_map(|k| table.column_index(k)).collect()
}

/// Key values of a row, or `None` when any key cell is null.
fn key_of<'t>(table: &'t Table, key_idx: &[usize], row: usize) -> Option<Vec<&'t str>> {
    key_idx.iter().map(|&c| table.cell(row, c).canonical()).collect()
}

fn scalar(cell: &Cell) -> Option<Scalar> {
    cell.parsed().and_then(Scalar::from_value)
}

// ---------------------------------------------------------------------------
// Missing
// ---------------------------------------------------------------------------

/// Reads an expected-keys baseline: one key per line, composite keys joined by TAB.
pub fn read_expected_keys(path: &std::path::Path) -> std::io::Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| !l.is_empty())
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect())
}

/// Required cells that are null, expected keys absent from a table, and
/// cross-table references that find no target row.
pub fn detect_missing(dataset: &Dataset, schema: &ConstraintSchema) -> Result<Vec<Issue>, DetectError> {
    let mut issues = Vec::new();
    for (tc, table) in bound_tables(dataset, schema)? {
        for (c, name) in table.header.iter().enumerate() {
            if !tc.is_required(name) {
                continue;
            }
            for (r, cell) in table.column_cells(c) {
                if cell.is_null() {
                    issues.push(
                        IssueDraft {
                            tables: vec![table.name.clone()],
                            rows: vec![r],
                            columns: vec![name.clone()],
                            scope: Scope::Cell,
                            attribute: Attribute::Missing,
                            constraint: REQUIRED,
                            violated_kind: None,
                            evidence: format!("required column {name} is null (raw {:?})", cell.raw),
                            detail: String::new(),
                        }
                        .build(),
                    );
                }
            }
        }

        if let Some(path) = &tc.expected_keys {
            let path = schema.resolve_path(path);
            let expected = read_expected_keys(&path).map_err(|source| DetectError::ExpectedKeys {
                table: table.name.clone(),
                path: path.clone(),
                source,
            })?;
            let key_idx = key_indices(table, tc);
            let present: HashSet<Vec<&str>> =
                (0..table.row_count()).filter_map(|r| key_of(table, &key_idx, r)).collect();
            let mut reported = HashSet::new();
            for key in &expected {
                let key_ref: Vec<&str> = key.iter().map(String::as_str).collect();
                if present.contains(&key_ref) || !reported.insert(key_ref.clone()) {
                    continue;
                }
                let shown = key.join(", ");
                issues.push(
                    IssueDraft {
                        tables: vec![table.name.clone()],
                        rows: vec![],
                        columns: tc.key.clone(),
                        scope: Scope::InterRow,
                        attribute: Attribute::Missing,
                        constraint: EXPECTED_KEYS,
                        violated_kind: None,
                        evidence: format!("expected {} ({shown}) has no row", tc.key.join(", ")),
                        detail: shown,
                    }
                    .build(),
                );
            }
        }
    }

    for rule in schema.reference_rules() {
        let join = Join::new(dataset, rule)?;
        for r in 0..join.from_table.row_count() {
            let Some(elements) = join.elements(r) else { continue };
            let mut unmatched: Vec<&str> = Vec::new();
            for e in elements {
                if !join.index.contains_key(e) && !unmatched.contains(&e) {
                    unmatched.push(e);
                }
            }
            if unmatched.is_empty() {
                continue;
            }
            issues.push(
                IssueDraft {
                    tables: vec![rule.from.table.clone(), rule.to.table.clone()],
                    rows: vec![r],
                    columns: vec![
                        format!("{}.{}", rule.from.table, rule.from.column),
                        format!("{}.{}", rule.to.table, rule.to.column),
                    ],
                    scope: Scope::InterTable,
                    attribute: Attribute::Missing,
                    constraint: &rule.id,
                    violated_kind: None,
                    evidence: format!(
                        "{} value(s) {} not found in {}.{}",
                        rule.from,
                        unmatched.iter().map(|u| format!("{u:?}")).collect::<Vec<_>>().join(", "),
                        rule.to.table,
                        rule.to.column
                    ),
                    detail: String::new(),
                }
                .build(),
            );
        }
    }

    sort_issues(&mut issues);
    Ok(issues)
}

// ---------------------------------------------------------------------------
// Invalid
// ---------------------------------------------------------------------------

/// Single-cell checks on non-null values: pattern, declared type, then range
/// or enumeration. At most one issue per cell.
pub fn detect_invalid(table: &Table, schema: &TableConstraint) -> Vec<Issue> {
    let mut issues = Vec::new();
    for (c, name) in table.header.iter().enumerate() {
        let Some(col) = schema.column(name) else { continue };
        for (r, cell) in table.column_cells(c) {
            let failure = match &cell.content {
                CellContent::Null => None,
                content => {
                    let pattern_failure = col.pattern.as_ref().and_then(|p| {
                        let ok = match (col.declared_type, content) {
                            (DeclaredType::IdList, CellContent::Parsed(Value::IdList(items))) => {
                                items.iter().all(|i| p.is_match(i))
                            }
                            _ => p.is_match(&cell.raw),
                        };
                        (!ok).then(|| {
                            (ViolatedKind::Pattern, format!("{name} {:?} does not match pattern {}", cell.raw, p.source()))
                        })
                    });
                    pattern_failure.or_else(|| match content {
                        CellContent::Unparsable(msg) => {
                            Some((ViolatedKind::Type, format!("{name} {msg} (declared {})", col.declared_type)))
                        }
                        CellContent::Parsed(v) => col.domain.as_ref().filter(|d| !d.contains(v)).map(|d| {
                            (ViolatedKind::Range, format!("{name} {:?} outside allowed {}", cell.raw, d.describe()))
                        }),
                        CellContent::Null => None,
                    })
                }
            };
            if let Some((kind, evidence)) = failure {
                issues.push(
                    IssueDraft {
                        tables: vec![table.name.clone()],
                        rows: vec![r],
                        columns: vec![name.clone()],
                        scope: Scope::Cell,
                        attribute: Attribute::Invalid,
                        constraint: kind.as_str(),
                        violated_kind: Some(kind),
                        evidence,
                        detail: String::new(),
                    }
                    .build(),
                );
            }
        }
    }
    sort_issues(&mut issues);
    issues
}

// ---------------------------------------------------------------------------
// Duplicates and key conflicts
// ---------------------------------------------------------------------------

/// Rows grouped by non-null key, groups in first-appearance order.
fn key_groups<'t>(table: &'t Table, key_idx: &[usize]) -> Vec<(Vec<&'t str>, Vec<usize>)> {
    let mut order: Vec<(Vec<&str>, Vec<usize>)> = Vec::new();
    let mut pos: HashMap<Vec<&str>, usize> = HashMap::new();
    for r in 0..table.row_count() {
        let Some(key) = key_of(table, key_idx, r) else { continue };
        match pos.get(&key) {
            Some(&i) => order[i].1.push(r),
            None => {
                pos.insert(key.clone(), order.len());
                order.push((key, vec![r]));
            }
        }
    }
    order
}

fn row_image(table: &Table, row: usize) -> Vec<Option<&str>> {
    table.rows[row].iter().map(Cell::canonical).collect()
}

/// Key-sharing rows that agree on every cell (null tokens compared as one
/// value). One issue per class of identical rows.
pub fn detect_duplicates(table: &Table, schema: &TableConstraint) -> Vec<Issue> {
    let key_idx = key_indices(table, schema);
    if key_idx.is_empty() {
        return Vec::new();
    }
    let mut issues = Vec::new();
    for (key, rows) in key_groups(table, &key_idx) {
        if rows.len() < 2 {
            continue;
        }
        let mut classes: Vec<(Vec<Option<&str>>, Vec<usize>)> = Vec::new();
        for &r in &rows {
            let image = row_image(table, r);
            match classes.iter_mut().find(|(img, _)| *img == image) {
                Some((_, members)) => members.push(r),
                None => classes.push((image, vec![r])),
            }
        }
        for (_, members) in classes.into_iter().filter(|(_, m)| m.len() >= 2) {
            let shown = key.join(", ");
            issues.push(
                IssueDraft {
                    tables: vec![table.name.clone()],
                    evidence: format!(
                        "rows {} are identical and share {} ({shown})",
                        join_rows(&members),
                        schema.key.join(", ")
                    ),
                    rows: members,
                    columns: schema.key.clone(),
                    scope: Scope::InterRow,
                    attribute: Attribute::Duplicate,
                    constraint: DUPLICATE_KEY,
                    violated_kind: None,
                    detail: shown,
                }
                .build(),
            );
        }
    }
    sort_issues(&mut issues);
    issues
}

fn join_rows(rows: &[usize]) -> String {
    rows.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ")
}

fn key_conflicts(table: &Table, schema: &TableConstraint) -> Vec<Issue> {
    let key_idx = key_indices(table, schema);
    if key_idx.is_empty() {
        return Vec::new();
    }
    let mut issues = Vec::new();
    for (key, rows) in key_groups(table, &key_idx) {
        if rows.len() < 2 {
            continue;
        }
        let differing: Vec<usize> = (0..table.header.len())
            .filter(|c| !key_idx.contains(c))
            .filter(|&c| {
                let first = table.cell(rows[0], c).canonical();
                rows[1..].iter().any(|&r| table.cell(r, c).canonical() != first)
            })
            .collect();
        if differing.is_empty() {
            continue;
        }
        let shown = key.join(", ");
        let variants: Vec<String> = differing
            .iter()
            .map(|&c| {
                let vals: Vec<String> = rows.iter().map(|&r| format!("{:?}", table.cell(r, c).raw)).collect();
                format!("{}=[{}]", table.header[c], vals.join(", "))
            })
            .collect();
        issues.push(
            IssueDraft {
                tables: vec![table.name.clone()],
                evidence: format!(
                    "rows {} share {} ({shown}) but differ: {}",
                    join_rows(&rows),
                    schema.key.join(", "),
                    variants.join("; ")
                ),
                rows,
                columns: differing.iter().map(|&c| table.header[c].clone()).collect(),
                scope: Scope::InterRow,
                attribute: Attribute::Conflict,
                constraint: KEY_CONFLICT,
                violated_kind: None,
                detail: shown,
            }
            .build(),
        );
    }
    issues
}

// ---------------------------------------------------------------------------
// Rule evaluation bindings
// ---------------------------------------------------------------------------

struct RowBinding<'a> {
    table: &'a Table,
    row: usize,
}

impl Binding for RowBinding<'_> {
    fn value(&self, column: &ColumnRef) -> Option<Scalar> {
        let c = self.table.column_index(&column.column)?;
        scalar(self.table.cell(self.row, c))
    }
}

/// A resolved `from -> to` join between two tables.
struct Join<'a> {
    from_table: &'a Table,
    from_col: usize,
    each_element: bool,
    to_table: &'a Table,
    index: HashMap<&'a str, Vec<usize>>,
}

impl<'a> Join<'a> {
    fn new(dataset: &'a Dataset, rule: &CrossTableRule) -> Result<Self, DetectError> {
        let table = |name: &str| dataset.table(name).ok_or_else(|| DetectError::MissingTable(name.to_string()));
        let from_table = table(&rule.from.table)?;
        let to_table = table(&rule.to.table)?;
        let missing_col = || DetectError::MissingTable(format!("{}", rule.from));
        let from_col = from_table.column_index(&rule.from.column).ok_or_else(missing_col)?;
        let to_col = to_table.column_index(&rule.to.column).ok_or_else(missing_col)?;
        let mut index: HashMap<&str, Vec<usize>> = HashMap::new();
        for (r, cell) in to_table.column_cells(to_col) {
            if let Some(raw) = cell.canonical() {
                index.entry(raw).or_default().push(r);
            }
        }
        Ok(Join { from_table, from_col, each_element: rule.from.each_element, to_table, index })
    }

    /// Join values of a from-row; `None` when the cell is null or unparsable.
    fn elements(&self, row: usize) -> Option<Vec<&'a str>> {
        let cell = self.from_table.cell(row, self.from_col);
        match (&cell.content, self.each_element) {
            (CellContent::Parsed(Value::IdList(items)), true) => Some(items.iter().map(String::as_str).collect()),
            (CellContent::Parsed(_), false) => Some(vec![cell.raw.as_str()]),
            _ => None,
        }
    }
}

struct CrossBinding<'a> {
    join: &'a Join<'a>,
    row: usize,
    /// Matched target rows per join element; `None` if any element is unmatched.
    matched: Option<Vec<&'a [usize]>>,
}

impl<'a> CrossBinding<'a> {
    fn new(join: &'a Join<'a>, row: usize) -> Self {
        let matched = join
            .elements(row)
            .and_then(|els| els.into_iter().map(|e| join.index.get(e).map(Vec::as_slice)).collect());
        CrossBinding { join, row, matched }
    }

    fn is_joined(&self, column: &ColumnRef, in_sum: bool) -> bool {
        match &column.table {
            None => in_sum,
            Some(t) => *t == self.join.to_table.name && (in_sum || *t != self.join.from_table.name),
        }
    }

    /// The value of `column` for one join element, if all matched rows agree.
    fn element_value(&self, rows: &[usize], column: &str) -> Option<Scalar> {
        let c = self.join.to_table.column_index(column)?;
        let first = scalar(self.join.to_table.cell(rows[0], c))?;
        rows[1..]
            .iter()
            .all(|&r| scalar(self.join.to_table.cell(r, c)).as_ref() == Some(&first))
            .then_some(first)
    }
}

impl Binding for CrossBinding<'_> {
    fn value(&self, column: &ColumnRef) -> Option<Scalar> {
        if self.is_joined(column, false) {
            let matched = self.matched.as_ref()?;
            match matched.as_slice() {
                [rows] => self.element_value(rows, &column.column),
                _ => None,
            }
        } else {
            let c = self.join.from_table.column_index(&column.column)?;
            scalar(self.join.from_table.cell(self.row, c))
        }
    }

    fn sum(&self, column: &ColumnRef) -> Option<f64> {
        if !self.is_joined(column, true) {
            return None;
        }
        self.matched.as_ref()?.iter().try_fold(0.0, |acc, rows| match self.element_value(rows, &column.column)? {
            Scalar::Number(x) => Some(acc + x),
            _ => None,
        })
    }
}

fn describe_bindings(expr: &Expr, binding: &dyn Binding, raw_of: impl Fn(&ColumnRef) -> Option<String>) -> String {
    let mut parts = Vec::new();
    let mut sums = Vec::new();
    collect_sums(expr, &mut sums);
    for c in expr.columns() {
        if sums.contains(&c) {
            if let Some(total) = binding.sum(c) {
                parts.push(format!("sum({c})={total}"));
            }
        } else if let Some(raw) = raw_of(c) {
            parts.push(format!("{c}={raw}"));
        }
    }
    parts.join(", ")
}

fn collect_sums<'e>(expr: &'e Expr, out: &mut Vec<&'e ColumnRef>) {
    match expr {
        Expr::Sum(c) => out.push(c),
        Expr::Unary(_, e) => collect_sums(e, out),
        Expr::Binary(_, l, r) => {
            collect_sums(l, out);
            collect_sums(r, out);
        }
        _ => {}
    }
}

// ---------------------------------------------------------------------------
// Conflicts
// ---------------------------------------------------------------------------

/// Row-rule violations, key-sharing rows that disagree, cross-table
/// expression violations, and header columns diverging from a baseline.
pub fn detect_conflicts(dataset: &Dataset, schema: &ConstraintSchema) -> Result<Vec<Issue>, DetectError> {
    let mut issues = Vec::new();
    for (tc, table) in bound_tables(dataset, schema)? {
        for rule in &tc.row_rules {
            let mut columns: Vec<&ColumnRef> = rule.expr.columns();
            columns.sort_by_key(|c| table.column_index(&c.column));
            let column_names: Vec<String> = columns.iter().map(|c| c.column.clone()).collect();
            for r in 0..table.row_count() {
                let binding = RowBinding { table, row: r };
                if eval_rule(&rule.expr, &binding, rule.tolerance) != Truth::Violated {
                    continue;
                }
                let values = describe_bindings(&rule.expr, &binding, |c| {
                    table.column_index(&c.column).map(|i| table.cell(r, i).raw.clone())
                });
                issues.push(
                    IssueDraft {
                        tables: vec![table.name.clone()],
                        rows: vec![r],
                        columns: column_names.clone(),
                        scope: Scope::InterColumn,
                        attribute: Attribute::Conflict,
                        constraint: &rule.id,
                        violated_kind: None,
                        evidence: format!("rule {} `{}` violated ({values})", rule.id, rule.source),
                        detail: String::new(),
                    }
                    .build(),
                );
            }
        }

        issues.extend(key_conflicts(table, tc));

        if let Some(baseline) = &tc.baseline_columns {
            let new_features = table.header.iter().filter(|h| !baseline.contains(h)).map(|h| (h, "new feature not in baseline"));
            let lost_features =
                baseline.iter().filter(|b| !table.header.contains(b)).map(|b| (b, "baseline feature missing from table"));
            for (feature, what) in new_features.chain(lost_features) {
                issues.push(
                    IssueDraft {
                        tables: vec![table.name.clone()],
                        rows: vec![],
                        columns: vec![feature.clone()],
                        scope: Scope::InterColumn,
                        attribute: Attribute::Conflict,
                        constraint: BASELINE,
                        violated_kind: None,
                        evidence: format!("{feature}: {what}"),
                        detail: what.to_string(),
                    }
                    .build(),
                );
            }
        }
    }

    for rule in &schema.cross_table {
        let CrossTableKind::Expression { source, expr, tolerance } = &rule.kind else { continue };
        let join = Join::new(dataset, rule)?;
        let qualified = |c: &ColumnRef, binding: &CrossBinding<'_>, in_sum: bool| {
            let table = if binding.is_joined(c, in_sum) { &rule.to.table } else { &rule.from.table };
            format!("{table}.{}", c.column)
        };
        for r in 0..join.from_table.row_count() {
            let binding = CrossBinding::new(&join, r);
            if eval_rule(expr, &binding, *tolerance) != Truth::Violated {
                continue;
            }
            let mut sums = Vec::new();
            collect_sums(expr, &mut sums);
            let mut columns: Vec<String> = Vec::new();
            for c in expr.columns() {
                let q = qualified(c, &binding, sums.contains(&c));
                if !columns.contains(&q) {
                    columns.push(q);
                }
            }
            let values = describe_bindings(expr, &binding, |c| {
                if binding.is_joined(c, false) {
                    binding.value(c).map(|v| format!("{v:?}"))
                } else {
                    join.from_table.column_index(&c.column).map(|i| join.from_table.cell(r, i).raw.clone())
                }
            });
            issues.push(
                IssueDraft {
                    tables: vec![rule.from.table.clone(), rule.to.table.clone()],
                    rows: vec![r],
                    columns,
                    scope: Scope::InterTable,
                    attribute: Attribute::Conflict,
                    constraint: &rule.id,
                    violated_kind: None,
                    evidence: format!("rule {} `{source}` violated ({values})", rule.id),
                    detail: String::new(),
                }
                .build(),
            );
        }
    }

    sort_issues(&mut issues);
    Ok(issues)
}

/// All integrity issues of a dataset, deterministically ordered.
pub fn detect_all(dataset: &Dataset, schema: &ConstraintSchema) -> Result<Vec<Issue>, DetectError> {
    let mut issues = detect_missing(dataset, schema)?;
    for (tc, table) in bound_tables(dataset, schema)? {
        issues.extend(detect_invalid(table, tc));
        issues.extend(detect_duplicates(table, tc));
    }
    issues.extend(detect_conflicts(dataset, schema)?);
    sort_issues(&mut issues);
    Ok(issues)
}

/// Cells covered by a cell-scope issue, keyed by table name.
pub fn cell_scope_cells(issues: &[Issue], tables: &Dataset) -> BTreeMap<String, HashSet<(usize, usize)>> {
    let mut out: BTreeMap<String, HashSet<(usize, usize)>> = BTreeMap::new();
    for issue in issues.iter().filter(|i| i.scope == Scope::Cell) {
        let Some(table) = tables.table(&issue.tables[0]) else { continue };
        let set = out.entry(table.name.clone()).or_default();
        for col in &issue.columns {
            if let Some(c) = table.column_index(col) {
                for &r in &issue.rows {
                    set.insert((r, c));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::load_table;
    use crate::schema::parse_schema;

    const SCHEMA: &str = include_str!("../fixtures/convenience_store/schema.json");
    const HEADER: &str = "ProductID,ProductName,ProductPrice,Discount,FinalPrice\n";

    fn store() -> ConstraintSchema {
        let mut s = parse_schema(SCHEMA).unwrap();
        for t in &mut s.tables {
            t.expected_keys = None;
        }
        s
    }

    fn dataset(products: &str, purchases: &str) -> (Dataset, ConstraintSchema) {
        let schema = store();
        let mut ds = Dataset::new();
        let p = load_table(&format!("{HEADER}{products}"), "product", &schema.null_policy, schema.table("product"))
            .unwrap();
        let q = load_table(
            &format!("PurchaseID,CustomerID,ProductIDList,PurchaseTotal\n{purchases}"),
            "purchase",
            &schema.null_policy,
            schema.table("purchase"),
        )
        .unwrap();
        ds.insert(p).unwrap();
        ds.insert(q).unwrap();
        (ds, schema)
    }

    #[test]
    fn missing_product_id_is_cell_missing() {
        let (ds, schema) = dataset(",Eggs,4.50,0.00,4.50\n", "");
        let issues = detect_missing(&ds, &schema).unwrap();
        assert_eq!(issues.len(), 1);
        assert_eq!((issues[0].scope, issues[0].attribute), (Scope::Cell, Attribute::Missing));
        assert_eq!(issues[0].columns, vec!["ProductID"]);
        // The null key shields every other detector.
        assert!(detect_conflicts(&ds, &schema).unwrap().is_empty());
        assert!(detect_invalid(ds.table("product").unwrap(), schema.table("product").unwrap()).is_empty());
    }

    #[test]
    fn dangling_list_element_is_inter_table_missing() {
        let (ds, schema) =
            dataset("10001,Apple,2.00,0.00,2.00\n", "1000000001,12345678,10001;10099;10099,6.00\n");
        let issues = detect_missing(&ds, &schema).unwrap();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].scope, Scope::InterTable);
        assert_eq!(issues[0].violated_constraint, "product_exists");
        assert!(issues[0].evidence.contains("\"10099\""));
        // The total rule cannot be evaluated, so it does not fire.
        assert!(detect_conflicts(&ds, &schema).unwrap().is_empty());
    }

    #[test]
    fn expected_keys_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let keys = dir.path().join("keys.txt");
        std::fs::write(&keys, "1000000001\n1000000002\r\n\n1000000002\n").unwrap();
        let (ds, mut schema) = dataset("", "1000000001,NULL,,0.00\n");
        schema.tables[1].expected_keys = Some(keys);
        let issues: Vec<Issue> =
            detect_missing(&ds, &schema).unwrap().into_iter().filter(|i| i.scope == Scope::InterRow).collect();
        assert_eq!(issues.len(), 1);
        assert!(issues[0].rows.is_empty());
        assert!(issues[0].evidence.contains("1000000002"));

        schema.tables[1].expected_keys = Some(dir.path().join("absent.txt"));
        assert!(matches!(detect_missing(&ds, &schema), Err(DetectError::ExpectedKeys { .. })));
    }

    #[test]
    fn invalid_kinds() {
        let (ds, schema) = dataset(
            "1001,Cheese,5.50,5.50,0.00\n10006,Yogurt,7.00,-1.00,8.00\n10007,Kiwi,cheap,0.00,1.00\n10008,Fig,2.00,0.00,2.00\n",
            "",
        );
        let issues = detect_invalid(ds.table("product").unwrap(), schema.table("product").unwrap());
        let kinds: Vec<(usize, &str, Option<ViolatedKind>)> =
            issues.iter().map(|i| (i.rows[0], i.columns[0].as_str(), i.violated_kind)).collect();
        assert_eq!(
            kinds,
            vec![
                (0, "ProductID", Some(ViolatedKind::Pattern)),
                (1, "Discount", Some(ViolatedKind::Range)),
                (2, "ProductPrice", Some(ViolatedKind::Type)),
            ]
        );
        assert!(issues.iter().all(|i| i.scope == Scope::Cell && i.attribute == Attribute::Invalid));
    }

    #[test]
    fn duplicates_versus_key_conflicts() {
        let (ds, schema) = dataset(
            "10008,Juice,6.50,6.50,0.00\n10008,Juice,6.50,6.50,0.00\n10009,Coffee,9.00,0.00,9.00\n10009,Coffee,9.00,1.00,8.00\n",
            "",
        );
        let table = ds.table("product").unwrap();
        let dups = detect_duplicates(table, schema.table("product").unwrap());
        assert_eq!(dups.len(), 1);
        assert_eq!(dups[0].rows, vec![0, 1]);
        let conflicts = detect_conflicts(&ds, &schema).unwrap();
        assert_eq!(conflicts.len(), 1);
        assert_eq!(conflicts[0].rows, vec![2, 3]);
        assert_eq!(conflicts[0].columns, vec!["Discount", "FinalPrice"]);
        assert_eq!(conflicts[0].scope, Scope::InterRow);
    }

    #[test]
    fn price_rule_and_purchase_total() {
        let (ds, schema) = dataset(
            "10007,Butter,10.00,2.00,7.50\n10011,Tea,5.00,0.00,5.00\n10012,Soda,2.00,0.00,2.00\n",
            "1000000001,12345678,10011;10012,9.00\n1000000002,12345678,10012;10012,4.00\n",
        );
        let issues = detect_conflicts(&ds, &schema).unwrap();
        assert_eq!(issues.len(), 2, "{issues:#?}");
        let column = issues.iter().find(|i| i.scope == Scope::InterColumn).unwrap();
        assert_eq!(column.violated_constraint, "final_price");
        assert_eq!(column.columns, vec!["ProductPrice", "Discount", "FinalPrice"]);
        let table = issues.iter().find(|i| i.scope == Scope::InterTable).unwrap();
        assert_eq!(table.violated_constraint, "purchase_total");
        assert_eq!(table.rows, vec![0]);
        assert!(table.evidence.contains("sum(product.FinalPrice)=7"), "{}", table.evidence);
        assert_eq!(table.columns, vec!["purchase.PurchaseTotal", "product.FinalPrice"]);
    }

    #[test]
    fn baseline_divergence() {
        let text = SCHEMA.replacen(
            "\"key\": [\"ProductID\"]",
            "\"key\": [\"ProductID\"], \"baseline_columns\": [\"ProductID\", \"ProductName\", \"ProductPrice\", \"FinalPrice\", \"Stock\"]",
            1,
        );
        let mut schema = parse_schema(&text).unwrap();
        schema.tables[1].expected_keys = None;
        let (ds, _) = dataset("", "");
        let issues: Vec<Issue> =
            detect_conflicts(&ds, &schema).unwrap().into_iter().filter(|i| i.violated_constraint == BASELINE).collect();
        let cols: Vec<&str> = issues.iter().map(|i| i.columns[0].as_str()).collect();
        assert_eq!(cols, vec!["Discount", "Stock"]);
        assert!(issues.iter().all(|i| i.scope == Scope::InterColumn));
    }

    #[test]
    fn ids_are_stable_and_distinct() {
        let (ds, schema) = dataset(
            "10007,Butter,10.00,2.00,7.50\n10008,Jam,10.00,2.00,7.50\n",
            "",
        );
        let a = detect_all(&ds, &schema).unwrap();
        let b = detect_all(&ds, &schema).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_ne!(a[0].id, a[1].id);
        assert!(a[0].id.starts_with("product:final_price:"));
    }
}
