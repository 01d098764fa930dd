//! Data-smell detection: legal values that are still suspicious.
//!
//! Smells never break a declared constraint, so a [`SmellFinding`] carries no
//! outcome label. Cells already reported as invalid or missing are passed in
//! as a [`CellMask`] and left out of every smell check.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::detectors::{cell_scope_cells, Issue};
use crate::ingest::{Cell, Dataset, InferredType, Table};
use crate::schema::{ConstraintSchema, NullPolicy, TableConstraint};
use crate::taxonomy::Attribute;

/// `(row, column)` positions excluded from smell evidence.
pub type CellMask = HashSet<(usize, usize)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmellKind {
    Believability,
    Consistency,
    Syntactic,
    Encoding,
}

impl From<SmellKind> for Attribute {
    fn from(kind: SmellKind) -> Attribute {
        match kind {
            SmellKind::Believability => Attribute::Believability,
            SmellKind::Consistency => Attribute::Consistency,
            SmellKind::Syntactic => Attribute::Syntactic,
            SmellKind::Encoding => Attribute::Encoding,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmellFinding {
    pub table: String,
    pub column: String,
    pub kind: SmellKind,
    pub rows: Vec<usize>,
    pub evidence: String,
    /// Suspiciousness in `[0, 1]`.
    pub score: f64,
}

/// Detection thresholds. All have engine defaults and can be overridden
/// from the schema file or the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmellParams {
    pub iqr_k: f64,
    pub z_max: f64,
    pub freq_threshold: f64,
    pub min_n: usize,
    /// Share a column's dominant inferred type needs before minority cells
    /// count as encoding smells.
    pub type_majority: f64,
}

impl Default for SmellParams {
    fn default() -> Self {
        SmellParams { iqr_k: 1.5, z_max: 3.0, freq_threshold: 0.5, min_n: 8, type_majority: 0.9 }
    }
}

impl SmellParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.iqr_k.is_finite() && self.iqr_k >= 0.0) {
            return Err(format!("iqr_k must be a non-negative number, got {}", self.iqr_k));
        }
        if !(self.z_max.is_finite() && self.z_max > 0.0) {
            return Err(format!("z_max must be positive, got {}", self.z_max));
        }
        if !(self.freq_threshold > 0.0 && self.freq_threshold <= 1.0) {
            return Err(format!("freq_threshold must lie in (0, 1], got {}", self.freq_threshold));
        }
        if self.min_n == 0 {
            return Err("min_n must be at least 1".into());
        }
        if !(self.type_majority > 0.5 && self.type_majority <= 1.0) {
            return Err(format!("type_majority must lie in (0.5, 1], got {}", self.type_majority));
        }
        Ok(())
    }
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn usable<'t>(table: &'t Table, column: usize, mask: &'t CellMask) -> impl Iterator<Item = (usize, &'t Cell)> {
    table.column_cells(column).filter(move |(r, _)| !mask.contains(&(*r, column)))
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

// ---------------------------------------------------------------------------
// Believability
// ---------------------------------------------------------------------------

/// Outliers (IQR fence or z-score) and improbable value concentration in
/// numeric columns with at least `min_n` usable values.
pub fn detect_believability(
    table: &Table,
    schema: &TableConstraint,
    params: &SmellParams,
    mask: &CellMask,
) -> Vec<SmellFinding> {
    let mut findings = Vec::new();
    for (c, name) in table.header.iter().enumerate() {
        if !schema.column(name).is_some_and(|col| col.declared_type.is_numeric()) {
            continue;
        }
        let values: Vec<(usize, f64)> =
            usable(table, c, mask).filter_map(|(r, cell)| cell.parsed()?.as_f64().map(|x| (r, x))).collect();
        let n = values.len();
        if n < params.min_n || n == 0 {
            continue;
        }

        let mut sorted: Vec<f64> = values.iter().map(|&(_, x)| x).collect();
        sorted.sort_by(f64::total_cmp);
        let q1 = quantile(&sorted, 0.25);
        let q3 = quantile(&sorted, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - params.iqr_k * iqr, q3 + params.iqr_k * iqr);
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();

        for &(r, x) in &values {
            let mut exceedance: f64 = 0.0;
            let mut reasons = Vec::new();
            if iqr > 0.0 && (x < lo_fence || x > hi_fence) {
                let dist = if x < lo_fence { lo_fence - x } else { x - hi_fence };
                exceedance = exceedance.max(dist / iqr);
                reasons.push(format!("outside IQR fence [{}, {}]", fmt_num(lo_fence), fmt_num(hi_fence)));
            }
            if sd > 0.0 {
                let z = (x - mean) / sd;
                if z.abs() > params.z_max {
                    exceedance = exceedance.max((z.abs() - params.z_max) / params.z_max);
                    reasons.push(format!("z-score {} beyond {}", fmt_num(z), fmt_num(params.z_max)));
                }
            }
            if !reasons.is_empty() {
                findings.push(SmellFinding {
                    table: table.name.clone(),
                    column: name.clone(),
                    kind: SmellKind::Believability,
                    rows: vec![r],
                    evidence: format!("outlier {name}={:?}: {}", table.cell(r, c).raw, reasons.join("; ")),
                    score: exceedance.min(1.0),
                });
            }
        }

        // +0.0 folds -0.0 into 0.0 so both count as one value.
        let mut by_value: BTreeMap<u64, (f64, Vec<usize>)> = BTreeMap::new();
        for &(r, x) in &values {
            by_value.entry((x + 0.0).to_bits()).or_insert((x, Vec::new())).1.push(r);
        }
        for (_, (x, rows)) in by_value {
            let share = rows.len() as f64 / n as f64;
            if share >= params.freq_threshold {
                findings.push(SmellFinding {
                    table: table.name.clone(),
                    column: name.clone(),
                    kind: SmellKind::Believability,
                    evidence: format!(
                        "concentration {name}={}: {} of {n} values ({:.1}%)",
                        fmt_num(x),
                        rows.len(),
                        share * 100.0
                    ),
                    rows,
                    score: share,
                });
            }
        }
    }
    sort_findings(&mut findings);
    findings
}

// ---------------------------------------------------------------------------
// Consistency
// ---------------------------------------------------------------------------

/// Trimmed, lower-cased, with internal whitespace runs squeezed to one space.
pub fn canonical_form(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn minority_share(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let top = counts.iter().copied().max().unwrap_or(0);
    if total == 0 {
        0.0
    } else {
        1.0 - top as f64 / total as f64
    }
}

/// Several spellings of absence, or of one value, within a column.
pub fn detect_consistency(table: &Table, null_policy: &NullPolicy, mask: &CellMask) -> Vec<SmellFinding> {
    let mut findings = Vec::new();
    for (c, name) in table.header.iter().enumerate() {
        let cells: Vec<(usize, &Cell)> = usable(table, c, mask).collect();

        let mut null_rows = Vec::new();
        let mut token_counts: Vec<(&str, usize)> = Vec::new();
        for &(r, cell) in cells.iter().filter(|(_, cell)| cell.is_null()) {
            null_rows.push(r);
            match token_counts.iter_mut().find(|(t, _)| *t == cell.raw) {
                Some((_, n)) => *n += 1,
                None => token_counts.push((&cell.raw, 1)),
            }
        }
        if token_counts.len() >= 2 {
            let order = |t: &str| null_policy.tokens().iter().position(|p| p == t);
            token_counts.sort_by_key(|(t, _)| order(t));
            let spelled: Vec<String> = token_counts.iter().map(|(t, n)| format!("{t:?} x{n}")).collect();
            findings.push(SmellFinding {
                table: table.name.clone(),
                column: name.clone(),
                kind: SmellKind::Consistency,
                rows: null_rows,
                evidence: format!("absence in {name} spelled {} ways: {}", token_counts.len(), spelled.join(", ")),
                score: minority_share(&token_counts.iter().map(|(_, n)| *n).collect::<Vec<_>>()),
            });
        }

        let mut groups: Vec<(String, Vec<(&str, Vec<usize>)>)> = Vec::new();
        let mut pos: HashMap<String, usize> = HashMap::new();
        for &(r, cell) in cells.iter().filter(|(_, cell)| !cell.is_null()) {
            let canon = canonical_form(&cell.raw);
            let gi = *pos.entry(canon.clone()).or_insert_with(|| {
                groups.push((canon, Vec::new()));
                groups.len() - 1
            });
            let variants = &mut groups[gi].1;
            match variants.iter_mut().find(|(v, _)| *v == cell.raw) {
                Some((_, rows)) => rows.push(r),
                None => variants.push((&cell.raw, vec![r])),
            }
        }
        for (canon, variants) in groups.into_iter().filter(|(_, v)| v.len() >= 2) {
            let mut rows: Vec<usize> = variants.iter().flat_map(|(_, rs)| rs.iter().copied()).collect();
            rows.sort_unstable();
            let spelled: Vec<String> = variants.iter().map(|(v, rs)| format!("{v:?} x{}", rs.len())).collect();
            findings.push(SmellFinding {
                table: table.name.clone(),
                column: name.clone(),
                kind: SmellKind::Consistency,
                rows,
                evidence: format!("{name} value {canon:?} spelled {} ways: {}", variants.len(), spelled.join(", ")),
                score: minority_share(&variants.iter().map(|(_, rs)| rs.len()).collect::<Vec<_>>()),
            });
        }
    }
    sort_findings(&mut findings);
    findings
}

// ---------------------------------------------------------------------------
// Syntactic
// ---------------------------------------------------------------------------

/// One label naming several entities in a `label_like` column.
pub fn detect_syntactic(table: &Table, schema: &TableConstraint, mask: &CellMask) -> Vec<SmellFinding> {
    let key_idx: Vec<usize> = schema.key.iter().filter_map(|k| table.column_index(k)).collect();
    if key_idx.is_empty() {
        return Vec::new();
    }
    let mut findings = Vec::new();
    for (c, name) in table.header.iter().enumerate() {
        if !schema.column(name).is_some_and(|col| col.label_like) {
            continue;
        }
        let mut by_label: Vec<(&str, Vec<usize>, Vec<Vec<&str>>)> = Vec::new();
        for (r, cell) in usable(table, c, mask) {
            let Some(label) = cell.canonical() else { continue };
            let Some(key) = key_idx.iter().map(|&k| table.cell(r, k).canonical()).collect::<Option<Vec<&str>>>()
            else {
                continue;
            };
            let entry = match by_label.iter().position(|(l, ..)| *l == label) {
                Some(i) => &mut by_label[i],
                None => {
                    by_label.push((label, Vec::new(), Vec::new()));
                    by_label.last_mut().expect("just pushed")
                }
            };
            entry.1.push(r);
            if !entry.2.contains(&key) {
                entry.2.push(key);
            }
        }
        for (label, rows, keys) in by_label.into_iter().filter(|(_, _, keys)| keys.len() >= 2) {
            let shown: Vec<String> = keys.iter().map(|k| k.join("/")).collect();
            findings.push(SmellFinding {
                table: table.name.clone(),
                column: name.clone(),
                kind: SmellKind::Syntactic,
                evidence: format!(
                    "{name}={label:?} names {} distinct {} ({})",
                    keys.len(),
                    schema.key.join("/"),
                    shown.join(", ")
                ),
                rows,
                score: 1.0 - 1.0 / keys.len() as f64,
            });
        }
    }
    sort_findings(&mut findings);
    findings
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

fn type_name(ty: InferredType) -> &'static str {
    match ty {
        InferredType::Integer => "integer",
        InferredType::Float => "float",
        InferredType::Boolean => "boolean",
        InferredType::Date => "date",
        InferredType::Text => "text",
    }
}

/// Cells whose inferred type disagrees with a dominant column type, and
/// leading-zero integers in numeric columns.
///
/// Integers count as floats in a column that holds any float.
pub fn detect_encoding(table: &Table, params: &SmellParams, mask: &CellMask) -> Vec<SmellFinding> {
    let mut findings = Vec::new();
    for (c, name) in table.header.iter().enumerate() {
        let cells: Vec<(usize, &Cell, InferredType)> = usable(table, c, mask)
            .filter_map(|(r, cell)| cell.inferred_type().map(|t| (r, cell, t)))
            .collect();
        if cells.is_empty() {
            continue;
        }
        let has_float = cells.iter().any(|(_, _, t)| *t == InferredType::Float);
        let effective = |t: InferredType| if has_float && t == InferredType::Integer { InferredType::Float } else { t };

        let mut histogram: BTreeMap<InferredType, usize> = BTreeMap::new();
        for (_, _, t) in &cells {
            *histogram.entry(effective(*t)).or_default() += 1;
        }
        let n = cells.len();
        let Some((&major, &count)) = histogram.iter().max_by_key(|(_, count)| **count) else { continue };
        if count * 2 <= n {
            continue;
        }
        let share = count as f64 / n as f64;

        for &(r, cell, t) in &cells {
            let t = effective(t);
            if share >= params.type_majority && t != major {
                findings.push(SmellFinding {
                    table: table.name.clone(),
                    column: name.clone(),
                    kind: SmellKind::Encoding,
                    rows: vec![r],
                    evidence: format!(
                        "{name}={:?} reads as {} in a {} column ({count} of {n} cells)",
                        cell.raw,
                        type_name(t),
                        type_name(major)
                    ),
                    score: share,
                });
            } else if matches!(major, InferredType::Integer | InferredType::Float) && cell.leading_zero_numeric() {
                findings.push(SmellFinding {
                    table: table.name.clone(),
                    column: name.clone(),
                    kind: SmellKind::Encoding,
                    rows: vec![r],
                    evidence: format!(
                        "{name}={:?} has a leading zero that numeric coercion would drop",
                        cell.raw
                    ),
                    score: 1.0,
                });
            }
        }
    }
    sort_findings(&mut findings);
    findings
}

// ---------------------------------------------------------------------------
// Whole-dataset scan
// ---------------------------------------------------------------------------

/// Sorts by (table, column, kind, first row), ties broken by evidence.
pub fn sort_findings(findings: &mut [SmellFinding]) {
    findings.sort_by(|a, b| {
        (&a.table, &a.column, a.kind, a.rows.first(), &a.evidence)
            .cmp(&(&b.table, &b.column, b.kind, b.rows.first(), &b.evidence))
    });
}

/// Runs every smell detector over every table. Cells covered by a
/// cell-scope entry of `issues` are masked out. Tables without a schema
/// entry only get the schema-free checks (consistency, encoding).
pub fn detect_smells(
    dataset: &Dataset,
    schema: &ConstraintSchema,
    params: &SmellParams,
    issues: &[Issue],
) -> Vec<SmellFinding> {
    let masks = cell_scope_cells(issues, dataset);
    let empty = CellMask::new();
    let mut findings = Vec::new();
    for table in dataset.tables() {
        let mask = masks.get(&table.name).unwrap_or(&empty);
        if let Some(tc) = schema.table(&table.name) {
            findings.extend(detect_believability(table, tc, params, mask));
            findings.extend(detect_syntactic(table, tc, mask));
        }
        findings.extend(detect_consistency(table, &schema.null_policy, mask));
        findings.extend(detect_encoding(table, params, mask));
    }
    sort_findings(&mut findings);
    findings
}
