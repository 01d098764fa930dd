//! Generators and brute-force oracles shared by the integration tests and the
//! acceptance runner. Oracles deliberately avoid the library's own helpers.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use dq_core::detectors::{detect_conflicts, detect_duplicates, Issue, DUPLICATE_KEY, KEY_CONFLICT};
use dq_core::ingest::{load_table, Dataset, Table};
use dq_core::schema::{parse_schema, ConstraintSchema, Expr, BinaryOp, ColumnRef, Literal, UnaryOp};
use dq_core::taxonomy::{Attribute, Scope};
use dq_core::triage::{Ticket, METRICS};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

// ---------------------------------------------------------------------------
// Golden corpus
// ---------------------------------------------------------------------------

/// (table, attribute, scope or "smell", outcome, first row) of every finding
/// the convenience-store corpus must produce.
pub const GOLDEN: [(&str, &str, &str, &str, Option<usize>); 13] = [
    ("product", "missing", "cell", "range", Some(5)),
    ("product", "invalid", "cell", "pattern", Some(6)),
    ("product", "invalid", "cell", "range", Some(7)),
    ("product", "conflict", "inter_column", "rule", Some(8)),
    ("product", "duplicate", "inter_row", "rule", Some(9)),
    ("product", "conflict", "inter_row", "rule", Some(11)),
    ("purchase", "missing", "inter_row", "rule", None),
    ("purchase", "conflict", "inter_table", "knowledge", Some(0)),
    ("purchase", "missing", "inter_table", "knowledge", Some(2)),
    ("product", "believability", "smell", "none", Some(2)),
    ("product", "syntactic", "smell", "none", Some(0)),
    ("product", "encoding", "smell", "none", Some(13)),
    ("purchase", "consistency", "smell", "none", Some(1)),
];

/// Reduces one `classify` output line to the golden tuple shape.
pub fn golden_key(line: &serde_json::Value) -> (String, String, String, String, Option<usize>) {
    let first_row = line["rows"].as_array().and_then(|r| r.first()).and_then(|v| v.as_u64()).map(|v| v as usize);
    let s = |v: &serde_json::Value| v.as_str().unwrap_or("?").to_string();
    if let Some(kind) = line.get("kind") {
        (s(&line["table"]), s(kind), "smell".into(), s(&line["outcome"]), first_row)
    } else {
        (s(&line["tables"][0]), s(&line["attribute"]), s(&line["scope"]), s(&line["outcome"]), first_row)
    }
}

pub fn golden_set() -> BTreeSet<(String, String, String, String, Option<usize>)> {
    GOLDEN
        .iter()
        .map(|(t, a, s, o, r)| (t.to_string(), a.to_string(), s.to_string(), o.to_string(), *r))
        .collect()
}

// ---------------------------------------------------------------------------
// Random tables for the duplicate / conflict oracle
// ---------------------------------------------------------------------------

const CELL_ALPHABET: [&str; 7] = ["0", "1", "2", "3", "", "NULL", "x"];

#[derive(Debug, Clone, Copy)]
pub enum RuleShape {
    Le(usize, usize),
    SumEq(usize, usize, usize),
    NeOrGt(usize, usize, usize),
}

impl RuleShape {
    fn text(self) -> String {
        match self {
            RuleShape::Le(a, b) => format!("c{a} <= c{b}"),
            RuleShape::SumEq(a, b, c) => format!("c{a} + c{b} == c{c}"),
            RuleShape::NeOrGt(a, b, c) => format!("c{a} != c{b} or c{c} > 1"),
        }
    }

    fn columns(self) -> Vec<usize> {
        let mut cols = match self {
            RuleShape::Le(a, b) => vec![a, b],
            RuleShape::SumEq(a, b, c) | RuleShape::NeOrGt(a, b, c) => vec![a, b, c],
        };
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    /// `Some(false)` exactly when every referenced cell is a number and the rule fails.
    fn holds(self, v: &[Option<i64>]) -> Option<bool> {
        Some(match self {
            RuleShape::Le(a, b) => v[a]? <= v[b]?,
            RuleShape::SumEq(a, b, c) => v[a]? + v[b]? == v[c]?,
            RuleShape::NeOrGt(a, b, c) => {
                let (x, y, z) = (v[a]?, v[b]?, v[c]?);
                x != y || z > 1
            }
        })
    }
}

pub struct RandomCase {
    pub schema: ConstraintSchema,
    pub dataset: Dataset,
    pub raw: Vec<Vec<&'static str>>,
    pub ncols: usize,
    pub key: Vec<usize>,
    pub rules: Vec<RuleShape>,
}

pub fn random_case(rng: &mut StdRng) -> RandomCase {
    let ncols = rng.gen_range(1..=4);
    let nrows = rng.gen_range(0..=8);
    let mut all: Vec<usize> = (0..ncols).collect();
    all.shuffle(rng);
    let mut key: Vec<usize> = all[..rng.gen_range(1..=ncols.min(2))].to_vec();
    key.sort_unstable();
    let pick = |rng: &mut StdRng| rng.gen_range(0..ncols);
    let rules: Vec<RuleShape> = (0..rng.gen_range(0..=2))
        .map(|_| match rng.gen_range(0..3) {
            0 => RuleShape::Le(pick(rng), pick(rng)),
            1 => RuleShape::SumEq(pick(rng), pick(rng), pick(rng)),
            _ => RuleShape::NeOrGt(pick(rng), pick(rng), pick(rng)),
        })
        .collect();

    // A narrow alphabet (and row copies) makes key collisions common.
    let mut raw: Vec<Vec<&'static str>> = Vec::new();
    for _ in 0..nrows {
        if !raw.is_empty() && rng.gen_bool(0.3) {
            let copy = raw[rng.gen_range(0..raw.len())].clone();
            raw.push(copy);
        } else {
            raw.push((0..ncols).map(|_| CELL_ALPHABET[rng.gen_range(0..CELL_ALPHABET.len())]).collect());
        }
    }

    let columns: Vec<String> = (0..ncols).map(|c| format!("\"c{c}\": {{\"type\": \"integer\"}}")).collect();
    let key_names: Vec<String> = key.iter().map(|c| format!("\"c{c}\"")).collect();
    let rule_json: Vec<String> =
        rules.iter().enumerate().map(|(i, r)| format!("{{\"id\": \"r{i}\", \"expr\": \"{}\"}}", r.text())).collect();
    let schema_text = format!(
        "{{\"tables\": {{\"t\": {{\"columns\": {{{}}}, \"key\": [{}], \"rules\": [{}]}}}}}}",
        columns.join(", "),
        key_names.join(", "),
        rule_json.join(", ")
    );
    let schema = parse_schema(&schema_text).unwrap_or_else(|e| panic!("{schema_text}: {e}"));

    let header: Vec<String> = (0..ncols).map(|c| format!("c{c}")).collect();
    let mut csv = header.join(",") + "\n";
    for row in &raw {
        // A lone empty field must be quoted, or the line reads as blank and is skipped.
        if row == &[""] {
            csv.push_str("\"\"");
        } else {
            csv.push_str(&row.join(","));
        }
        csv.push('\n');
    }
    let table = load_table(&csv, "t", &schema.null_policy, schema.table("t")).unwrap();
    let mut dataset = Dataset::new();
    dataset.insert(table).unwrap();
    RandomCase { schema, dataset, raw, ncols, key, rules }
}

/// (constraint, rows, columns) triples; the comparison unit of the oracle.
pub type Finding = (String, Vec<usize>, Vec<String>);

fn is_null(raw: &str) -> bool {
    raw.is_empty() || raw == "NULL"
}

fn null_eq(a: &str, b: &str) -> bool {
    (is_null(a) && is_null(b)) || a == b
}

/// Enumerates duplicates, key conflicts and row-rule violations directly
/// from the raw strings.
pub fn oracle(case: &RandomCase) -> BTreeSet<Finding> {
    let raw = &case.raw;
    let n = raw.len();
    let name = |c: usize| format!("c{c}");
    let mut out = BTreeSet::new();

    let key_null = |r: usize| case.key.iter().any(|&k| is_null(raw[r][k]));
    let same_key = |i: usize, j: usize| case.key.iter().all(|&k| raw[i][k] == raw[j][k]);
    let identical = |i: usize, j: usize| (0..case.ncols).all(|c| null_eq(raw[i][c], raw[j][c]));

    let mut seen = vec![false; n];
    for i in 0..n {
        if key_null(i) || seen[i] {
            continue;
        }
        let group: Vec<usize> = (0..n).filter(|&j| !key_null(j) && same_key(i, j)).collect();
        for &j in &group {
            seen[j] = true;
        }
        if group.len() < 2 {
            continue;
        }
        let differing: Vec<String> = (0..case.ncols)
            .filter(|c| !case.key.contains(c))
            .filter(|&c| group.iter().any(|&j| !null_eq(raw[j][c], raw[group[0]][c])))
            .map(name)
            .collect();
        if !differing.is_empty() {
            out.insert((KEY_CONFLICT.to_string(), group.clone(), differing));
        }
        let mut classified = vec![false; n];
        for &a in &group {
            if classified[a] {
                continue;
            }
            let class: Vec<usize> = group.iter().copied().filter(|&b| identical(a, b)).collect();
            for &b in &class {
                classified[b] = true;
            }
            if class.len() >= 2 {
                let key_cols = case.key.iter().map(|&k| name(k)).collect();
                out.insert((DUPLICATE_KEY.to_string(), class, key_cols));
            }
        }
    }

    for (i, rule) in case.rules.iter().enumerate() {
        for (r, row) in raw.iter().enumerate() {
            let values: Vec<Option<i64>> = row.iter().map(|s| s.parse().ok()).collect();
            if rule.holds(&values) == Some(false) {
                out.insert((format!("r{i}"), vec![r], rule.columns().into_iter().map(name).collect()));
            }
        }
    }
    out
}

/// The same three families as reported by the library.
pub fn detected(case: &RandomCase) -> BTreeSet<Finding> {
    let table = case.dataset.table("t").unwrap();
    let tc = case.schema.table("t").unwrap();
    let mut issues: Vec<Issue> = detect_duplicates(table, tc);
    issues.extend(detect_conflicts(&case.dataset, &case.schema).unwrap());
    issues.into_iter().map(|i| (i.violated_constraint, i.rows, i.columns)).collect()
}

// ---------------------------------------------------------------------------
// Believability oracle
// ---------------------------------------------------------------------------

pub struct NumericColumn {
    /// Values in quarter units (`x = q / 4`); `None` is a null cell.
    pub quarters: Vec<Option<i64>>,
}

impl NumericColumn {
    pub fn random(rng: &mut StdRng) -> Self {
        let n = rng.gen_range(0..40);
        let constant = rng.gen_bool(0.2).then(|| rng.gen_range(-8..8));
        let quarters = (0..n)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    return None;
                }
                if let Some(c) = constant {
                    if rng.gen_bool(0.7) {
                        return Some(c);
                    }
                }
                Some(if rng.gen_bool(0.08) {
                    rng.gen_range(200..1600) * if rng.gen_bool(0.5) { 1 } else { -1 }
                } else {
                    rng.gen_range(-40..40)
                })
            })
            .collect();
        NumericColumn { quarters }
    }

    pub fn table(&self) -> (Table, ConstraintSchema) {
        let schema = parse_schema(r#"{"tables": {"t": {"columns": {"x": {"type": "float"}}}}}"#).unwrap();
        let mut csv = String::from("x\n");
        for q in &self.quarters {
            match q {
                Some(q) => csv.push_str(&format!("{:.2}\n", *q as f64 / 4.0)),
                None => csv.push_str("NULL\n"),
            }
        }
        let t = load_table(&csv, "t", &schema.null_policy, schema.table("t")).unwrap();
        (t, schema)
    }
}

/// Parameters as exact ratios `(numerator, denominator)`.
#[derive(Debug, Clone, Copy)]
pub struct RatioParams {
    pub iqr_k: (i128, i128),
    pub z_max: (i128, i128),
    pub freq: (i128, i128),
    pub min_n: usize,
}

impl RatioParams {
    pub fn random(rng: &mut StdRng) -> Self {
        let k = [(1, 1), (3, 2), (2, 1), (3, 1)];
        let z = [(2, 1), (5, 2), (3, 1)];
        let f = [(3, 10), (1, 2), (7, 10)];
        RatioParams {
            iqr_k: *k.choose(rng).unwrap(),
            z_max: *z.choose(rng).unwrap(),
            freq: *f.choose(rng).unwrap(),
            min_n: *[5usize, 8].choose(rng).unwrap(),
        }
    }

    pub fn to_params(self) -> dq_core::smells::SmellParams {
        let r = |(a, b): (i128, i128)| a as f64 / b as f64;
        dq_core::smells::SmellParams {
            iqr_k: r(self.iqr_k),
            z_max: r(self.z_max),
            freq_threshold: r(self.freq),
            min_n: self.min_n,
            ..Default::default()
        }
    }
}

/// Outlier rows and concentration row groups, in exact integer arithmetic.
pub fn believability_oracle(col: &NumericColumn, p: RatioParams) -> (BTreeSet<usize>, BTreeSet<Vec<usize>>) {
    let present: Vec<(usize, i128)> =
        col.quarters.iter().enumerate().filter_map(|(r, q)| q.map(|q| (r, q as i128))).collect();
    let n = present.len();
    if n < p.min_n || n == 0 {
        return (BTreeSet::new(), BTreeSet::new());
    }
    let mut sorted: Vec<i128> = present.iter().map(|&(_, q)| q).collect();
    sorted.sort();
    // Quantile in sixteenths: position (n-1)*p with p in quarters.
    let q16 = |quarter_pos: usize| {
        let h4 = (n - 1) * quarter_pos;
        let (lo, frac) = (h4 / 4, (h4 % 4) as i128);
        let hi = (lo + 1).min(n - 1);
        4 * sorted[lo] + frac * (sorted[hi] - sorted[lo])
    };
    let (q1, q3) = (q16(1), q16(3));
    let iqr = q3 - q1;
    let (kn, kd) = p.iqr_k;
    let s: i128 = sorted.iter().sum();
    let sq: i128 = sorted.iter().map(|x| x * x).sum();
    let n_i = n as i128;
    let spread = n_i * sq - s * s;
    let (zn, zd) = p.z_max;

    let mut outliers = BTreeSet::new();
    for &(r, x) in &present {
        let x16 = 4 * x;
        let iqr_flag = iqr > 0 && (x16 * kd < q1 * kd - kn * iqr || x16 * kd > q3 * kd + kn * iqr);
        let dev = n_i * x - s;
        let z_flag = spread > 0 && zd * zd * dev * dev > zn * zn * spread;
        if iqr_flag || z_flag {
            outliers.insert(r);
        }
    }

    let mut groups: BTreeMap<i128, Vec<usize>> = BTreeMap::new();
    for &(r, x) in &present {
        groups.entry(x).or_default().push(r);
    }
    let (fn_, fd) = p.freq;
    let concentrated =
        groups.into_values().filter(|rows| rows.len() as i128 * fd >= fn_ * n_i).collect();
    (outliers, concentrated)
}

/// Splits library believability output into the same two shapes.
pub fn believability_detected(
    findings: &[dq_core::smells::SmellFinding],
) -> (BTreeSet<usize>, BTreeSet<Vec<usize>>) {
    let mut outliers = BTreeSet::new();
    let mut groups = BTreeSet::new();
    for f in findings {
        assert!(f.score > 0.0 && f.score <= 1.0, "score out of range: {f:?}");
        if f.evidence.starts_with("outlier") {
            outliers.extend(f.rows.iter().copied());
        } else {
            groups.insert(f.rows.clone());
        }
    }
    (outliers, groups)
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

const COLUMNS: [&str; 3] = ["a", "b", "c"];

/// Random well-formed tree: literal leaves are non-negative (a leading minus
/// is a unary operator in the surface syntax).
pub fn random_expr(rng: &mut StdRng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..7) {
            0 | 1 | 2 => Expr::Column(ColumnRef::bare(COLUMNS[rng.gen_range(0..3)])),
            3 => Expr::Literal(Literal::Int(rng.gen_range(0..1000))),
            4 => Expr::Literal(Literal::Float(rng.gen_range(0..4000) as f64 / 8.0)),
            5 => Expr::Literal(Literal::Bool(rng.gen_bool(0.5))),
            _ => Expr::Sum(ColumnRef::qualified("u", COLUMNS[rng.gen_range(0..3)])),
        };
    }
    if rng.gen_bool(0.15) {
        let op = if rng.gen_bool(0.5) { UnaryOp::Not } else { UnaryOp::Neg };
        return Expr::unary(op, random_expr(rng, depth - 1));
    }
    let ops = [
        BinaryOp::Or,
        BinaryOp::And,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
    ];
    let op = ops[rng.gen_range(0..ops.len())];
    Expr::binary(op, random_expr(rng, depth - 1), random_expr(rng, depth - 1))
}

// ---------------------------------------------------------------------------
// Tickets
// ---------------------------------------------------------------------------

pub fn random_tickets(rng: &mut StdRng, n: usize) -> Vec<Ticket> {
    let pairs = dq_core::classify::PERMITTED_PAIRS;
    (0..n)
        .map(|i| {
            let (attribute, outcome) = pairs[rng.gen_range(0..pairs.len())];
            Ticket {
                id: format!("R{i}"),
                attribute,
                outcome,
                severity: rng.gen_range(0..4),
                priority: rng.gen_range(0..5),
                days_to_fix: rng.gen_range(0.0..90.0),
                comment_number: rng.gen_range(0..40),
            }
        })
        .collect()
}

/// Two-pass per-category [mean, max] keyed by the category label.
pub fn stats_oracle(tickets: &[Ticket], category: impl Fn(&Ticket) -> Option<String>) -> BTreeMap<String, (usize, [(f64, f64); 4])> {
    let mut members: BTreeMap<String, Vec<&Ticket>> = BTreeMap::new();
    for t in tickets {
        if let Some(c) = category(t) {
            members.entry(c).or_default().push(t);
        }
    }
    members
        .into_iter()
        .map(|(c, ts)| {
            let metric = |t: &Ticket, m: usize| match METRICS[m] {
                "severity" => t.severity as f64,
                "priority" => t.priority as f64,
                "days_to_fix" => t.days_to_fix,
                _ => t.comment_number as f64,
            };
            let stats = std::array::from_fn(|m| {
                let values: Vec<f64> = ts.iter().map(|t| metric(t, m)).collect();
                let mean = values.iter().rev().sum::<f64>() / values.len() as f64;
                let max = values.iter().copied().fold(f64::MIN, f64::max);
                (mean, max)
            });
            (c, (ts.len(), stats))
        })
        .collect()
}

/// Whether an issue's (attribute, scope) combination is one the taxonomy allows.
pub fn scope_is_legal(issue: &Issue) -> bool {
    Attribute::legal_at(issue.scope).contains(&issue.attribute) && Scope::ALL.contains(&issue.scope)
}

// ---------------------------------------------------------------------------
// Random two-table stores for the pipeline fuzz
// ---------------------------------------------------------------------------

const STORE_SCHEMA: &str = r#"{
  "tables": {
    "p": {
      "columns": {
        "id": {"type": "integer", "pattern": "[0-9]{2}", "required": true},
        "name": {"type": "text", "required": true, "label_like": true},
        "price": {"type": "float", "range": {"min": 0, "max": 50}},
        "disc": {"type": "float", "range": {"min": 0}},
        "fin": {"type": "float"}
      },
      "key": ["id"],
      "rules": [
        {"id": "fin", "expr": "fin == price - disc"},
        {"id": "cap", "expr": "disc <= price"}
      ]
    },
    "q": {
      "columns": {
        "qid": {"type": "integer", "required": true},
        "ids": {"type": "id_list", "required": true},
        "total": {"type": "float", "range": {"min": 0}}
      },
      "key": ["qid"]
    }
  },
  "cross_table": [
    {"id": "ref", "kind": "reference", "from": "q.ids[*]", "to": "p.id"},
    {"id": "sum", "kind": "expression", "from": "q.ids[*]", "to": "p.id", "expr": "total == sum(p.fin)"}
  ]
}"#;

fn pick<'a>(rng: &mut StdRng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

/// A small two-table dataset with every kind of defect drawn at random.
/// `expected_keys`, when given, is a scratch file path for the `q` baseline.
pub fn random_store(rng: &mut StdRng, expected_keys: Option<&std::path::Path>) -> (ConstraintSchema, Dataset) {
    let mut schema = parse_schema(STORE_SCHEMA).unwrap();
    let ids = ["10", "11", "12", "13", "7", "010", "", "NULL", "ab"];
    let names = ["Apple", "apple", "Apple ", "Pear", "0042", "", "NaN", "Fig"];
    let nums = ["0", "0.00", "1.5", "2", "3.25", "-1", "49.5", "60", "x", "", "NULL", "7"];

    let mut p = String::from("id,name,price,disc,fin\n");
    for _ in 0..rng.gen_range(0..12) {
        let row = [pick(rng, &ids), pick(rng, &names), pick(rng, &nums), pick(rng, &nums), pick(rng, &nums)];
        p.push_str(&row.join(","));
        p.push('\n');
    }
    let lists = ["10", "10;11", "12;12", "99", "10;", "", "NULL", "13;7"];
    let qids = ["1", "2", "3", "", "z"];
    let mut q = String::from("qid,ids,total\n");
    for _ in 0..rng.gen_range(0..6) {
        let row = [pick(rng, &qids), pick(rng, &lists), pick(rng, &nums)];
        q.push_str(&row.join(","));
        q.push('\n');
    }

    if let Some(path) = expected_keys {
        let keys: Vec<&str> = ["1", "2", "3", "4"].into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        std::fs::write(path, keys.join("\n")).unwrap();
        schema.tables[1].expected_keys = Some(path.to_path_buf());
    }

    let mut dataset = Dataset::new();
    dataset.insert(load_table(&p, "p", &schema.null_policy, schema.table("p")).unwrap()).unwrap();
    dataset.insert(load_table(&q, "q", &schema.null_policy, schema.table("q")).unwrap()).unwrap();
    (schema, dataset)
}
