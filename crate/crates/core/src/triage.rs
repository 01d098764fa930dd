//! Labeled issue tickets: parsing, category distributions and fix-difficulty
//! statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::is_permitted;
use crate::taxonomy::{Attribute, OutcomeLabel};

pub const SEVERITY_LEVELS: [&str; 4] = ["Low", "Medium", "High", "Critical"];
pub const PRIORITY_LEVELS: [&str; 5] = ["Lowest", "Low", "Medium", "High", "Highest"];

/// Ordinal of a severity word, `Low`=0 through `Critical`=3. Case-insensitive.
pub fn severity_ordinal(word: &str) -> Option<u8> {
    level(word, &SEVERITY_LEVELS)
}

/// Ordinal of a priority word, `Lowest`=0 through `Highest`=4. Case-insensitive.
pub fn priority_ordinal(word: &str) -> Option<u8> {
    level(word, &PRIORITY_LEVELS)
}

fn level(word: &str, levels: &[&str]) -> Option<u8> {
    let word = word.trim();
    levels.iter().position(|l| l.eq_ignore_ascii_case(word)).map(|i| i as u8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ticket {
    pub id: String,
    pub attribute: Attribute,
    pub outcome: OutcomeLabel,
    pub severity: u8,
    pub priority: u8,
    pub days_to_fix: f64,
    pub comment_number: u64,
}

impl Ticket {
    /// The four difficulty metrics, in [`METRICS`] order.
    pub fn metrics(&self) -> [f64; 4] {
        [self.severity as f64, self.priority as f64, self.days_to_fix, self.comment_number as f64]
    }

    /// Ticket-file form, with level words rather than ordinals.
    pub fn to_raw(&self) -> RawTicket {
        RawTicket {
            id: self.id.clone(),
            attribute: self.attribute.as_str().to_string(),
            outcome: self.outcome.as_str().to_string(),
            severity: SEVERITY_LEVELS[self.severity as usize].to_string(),
            priority: PRIORITY_LEVELS[self.priority as usize].to_string(),
            days_to_fix: serde_json::Number::from_f64(self.days_to_fix).map_or(Field::Text(String::new()), Field::Number),
            comment_number: Field::Number(self.comment_number.into()),
        }
    }
}

pub const METRICS: [&str; 4] = ["severity", "priority", "days_to_fix", "comment_number"];

/// A number that may arrive as JSON number or as text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Field {
    Number(serde_json::Number),
    Text(String),
}

impl Field {
    fn text(&self) -> String {
        match self {
            Field::Number(n) => n.to_string(),
            Field::Text(s) => s.trim().to_string(),
        }
    }
}

/// A ticket row as written in CSV or JSON-Lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTicket {
    pub id: String,
    pub attribute: String,
    pub outcome: String,
    pub severity: String,
    pub priority: String,
    pub days_to_fix: Field,
    pub comment_number: Field,
}

#[derive(Debug, thiserror::Error)]
pub enum TicketError {
    #[error("ticket file is empty")]
    Empty,
    #[error("ticket row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("malformed ticket CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl RawTicket {
    /// Converts a raw row. `row` is 1-based and only used in errors.
    pub fn resolve(&self, row: usize) -> Result<Ticket, TicketError> {
        let err = |message: String| TicketError::Row { row, message };
        let id = self.id.trim().to_string();
        if id.is_empty() {
            return Err(err("empty id".into()));
        }
        let attribute: Attribute = self.attribute.parse().map_err(|e| err(format!("{e}")))?;
        let outcome: OutcomeLabel = self.outcome.parse().map_err(|e| err(format!("{e}")))?;
        let severity = severity_ordinal(&self.severity).ok_or_else(|| {
            err(format!("unknown severity {:?}, expected one of {}", self.severity, SEVERITY_LEVELS.join(", ")))
        })?;
        let priority = priority_ordinal(&self.priority).ok_or_else(|| {
            err(format!("unknown priority {:?}, expected one of {}", self.priority, PRIORITY_LEVELS.join(", ")))
        })?;
        let days = self.days_to_fix.text();
        let days_to_fix: f64 = days.parse().map_err(|_| err(format!("days_to_fix {days:?} is not a number")))?;
        if !days_to_fix.is_finite() || days_to_fix < 0.0 {
            return Err(err(format!("days_to_fix must be a non-negative number, got {days}")));
        }
        let comments = self.comment_number.text();
        let comment_number: u64 = comments
            .parse()
            .map_err(|_| err(format!("comment_number must be a non-negative integer, got {comments:?}")))?;
        Ok(Ticket { id, attribute, outcome, severity, priority, days_to_fix, comment_number })
    }
}

/// Parses a ticket file. JSON-Lines is recognized by a leading `{`,
/// anything else is read as CSV with a header row.
pub fn parse_tickets(text: &str) -> Result<Vec<Ticket>, TicketError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Err(TicketError::Empty);
    }
    if trimmed.starts_with('{') {
        let mut tickets = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawTicket =
                serde_json::from_str(line).map_err(|e| TicketError::Row { row: i + 1, message: e.to_string() })?;
            tickets.push(raw.resolve(i + 1)?);
        }
        return Ok(tickets);
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut tickets = Vec::new();
    for (i, record) in reader.deserialize::<RawTicket>().enumerate() {
        // Row numbers count the header as row 1.
        let raw = record.map_err(|e| TicketError::Row { row: i + 2, message: e.to_string() })?;
        tickets.push(raw.resolve(i + 2)?);
    }
    Ok(tickets)
}

/// Ids of tickets whose (attribute, outcome) pair is not permitted.
pub fn validate_ticket_alignment(tickets: &[Ticket]) -> Vec<String> {
    tickets.iter().filter(|t| !is_permitted(t.attribute, t.outcome)).map(|t| t.id.clone()).collect()
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    AttributeDist,
    OutcomeDist,
    AttributeStats,
    OutcomeStats,
    Crosstab,
    PairStats,
}

impl Mode {
    pub const ALL: [Mode; 6] =
        [Mode::AttributeDist, Mode::OutcomeDist, Mode::AttributeStats, Mode::OutcomeStats, Mode::Crosstab, Mode::PairStats];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::AttributeDist => "attribute_dist",
            Mode::OutcomeDist => "outcome_dist",
            Mode::AttributeStats => "attribute_stats",
            Mode::OutcomeStats => "outcome_stats",
            Mode::Crosstab => "crosstab",
            Mode::PairStats => "pair_stats",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Mode::ALL.iter().map(|m| m.as_str()).collect();
            format!("unknown mode {s:?}, expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanMax {
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryStats {
    /// Attribute, outcome, or `attribute/outcome` for pairs.
    pub category: String,
    pub count: usize,
    /// One entry per metric, in [`METRICS`] order.
    pub metrics: [MeanMax; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub enum Summary {
    Counts { dimension: &'static str, counts: Vec<(String, usize)> },
    Stats { dimension: &'static str, categories: Vec<CategoryStats> },
    /// Integrity attributes by integrity outcomes, all cells present.
    Crosstab { attributes: Vec<Attribute>, outcomes: Vec<OutcomeLabel>, counts: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TriageError {
    #[error("{0} needs at least one ticket")]
    EmptyInput(&'static str),
}

fn mean_max<'a>(tickets: impl Iterator<Item = &'a Ticket>) -> (usize, [MeanMax; 4]) {
    let mut n = 0usize;
    let mut sum = [0.0; 4];
    let mut max = [f64::NEG_INFINITY; 4];
    for t in tickets {
        n += 1;
        for (i, m) in t.metrics().into_iter().enumerate() {
            sum[i] += m;
            max[i] = max[i].max(m);
        }
    }
    let stats = std::array::from_fn(|i| MeanMax { mean: sum[i] / n as f64, max: max[i] });
    (n, stats)
}

fn stats_by<K: Ord + Copy>(
    tickets: &[Ticket],
    keys: &[K],
    key: impl Fn(&Ticket) -> Option<K>,
    name: impl Fn(K) -> String,
) -> Vec<CategoryStats> {
    keys.iter()
        .filter_map(|&k| {
            let (count, metrics) = mean_max(tickets.iter().filter(|t| key(t) == Some(k)));
            (count > 0).then(|| CategoryStats { category: name(k), count, metrics })
        })
        .collect()
}

fn integrity_outcome(t: &Ticket) -> Option<OutcomeLabel> {
    (t.outcome != OutcomeLabel::NoneSmell).then_some(t.outcome)
}

/// Aggregates tickets. The outcome modes and the crosstab cover integrity
/// tickets only, since smells carry the `none` outcome; the attribute modes
/// and `pair_stats` cover every ticket.
pub fn summarize(tickets: &[Ticket], mode: Mode) -> Result<Summary, TriageError> {
    Ok(match mode {
        Mode::AttributeDist => {
            let mut tally: Vec<(String, usize)> = Attribute::ALL.iter().map(|a| (a.as_str().to_string(), 0)).collect();
            for t in tickets {
                tally.iter_mut().find(|(k, _)| k == t.attribute.as_str()).expect("closed vocabulary").1 += 1;
            }
            tally.retain(|(_, n)| *n > 0);
            Summary::Counts { dimension: "attribute", counts: tally }
        }
        Mode::OutcomeDist => {
            let mut tally: Vec<(String, usize)> =
                OutcomeLabel::INTEGRITY.iter().map(|o| (o.as_str().to_string(), 0)).collect();
            for o in tickets.iter().filter_map(integrity_outcome) {
                tally.iter_mut().find(|(k, _)| k == o.as_str()).expect("integrity outcome").1 += 1;
            }
            tally.retain(|(_, n)| *n > 0);
            Summary::Counts { dimension: "outcome", counts: tally }
        }
        Mode::AttributeStats => {
            if tickets.is_empty() {
                return Err(TriageError::EmptyInput("attribute_stats"));
            }
            let categories = stats_by(tickets, &Attribute::ALL, |t| Some(t.attribute), |a| a.as_str().to_string());
            Summary::Stats { dimension: "attribute", categories }
        }
        Mode::OutcomeStats => {
            if tickets.is_empty() {
                return Err(TriageError::EmptyInput("outcome_stats"));
            }
            let categories =
                stats_by(tickets, &OutcomeLabel::INTEGRITY, integrity_outcome, |o| o.as_str().to_string());
            Summary::Stats { dimension: "outcome", categories }
        }
        Mode::PairStats => {
            if tickets.is_empty() {
                return Err(TriageError::EmptyInput("pair_stats"));
            }
            let pairs: Vec<(OutcomeLabel, Attribute)> = OutcomeLabel::ALL
                .iter()
                .flat_map(|&o| Attribute::ALL.iter().map(move |&a| (o, a)))
                .collect();
            let categories = stats_by(
                tickets,
                &pairs,
                |t| Some((t.outcome, t.attribute)),
                |(o, a)| format!("{}/{}", a.as_str(), o.as_str()),
            );
            Summary::Stats { dimension: "pair", categories }
        }
        Mode::Crosstab => {
            let attributes = Attribute::INTEGRITY.to_vec();
            let outcomes = OutcomeLabel::INTEGRITY.to_vec();
            let mut matrix = vec![vec![0usize; outcomes.len()]; attributes.len()];
            let mut index: BTreeMap<(Attribute, OutcomeLabel), (usize, usize)> = BTreeMap::new();
            for (i, a) in attributes.iter().enumerate() {
                for (j, o) in outcomes.iter().enumerate() {
                    index.insert((*a, *o), (i, j));
                }
            }
            for t in tickets {
                if let Some(&(i, j)) = index.get(&(t.attribute, t.outcome)) {
                    matrix[i][j] += 1;
                }
            }
            Summary::Crosstab { attributes, outcomes, counts: matrix }
        }
    })
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format {other:?}, expected text, csv or jsonl")),
        }
    }
}

fn table_text(rows: &[Vec<String>]) -> String {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..width).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn table_csv(rows: &[Vec<String>]) -> String {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for row in rows {
        writer.write_record(row).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("writing to memory")).expect("csv of utf-8 input")
}

fn num(x: f64) -> String {
    format!("{x:.2}")
}

impl Summary {
    /// Header row followed by data rows. Text output adds a total row to counts and crosstabs.
    fn rows(&self, with_totals: bool) -> Vec<Vec<String>> {
        match self {
            Summary::Counts { dimension, counts } => {
                let mut rows = vec![vec![dimension.to_string(), "count".into()]];
                rows.extend(counts.iter().map(|(k, n)| vec![k.clone(), n.to_string()]));
                if with_totals {
                    rows.push(vec!["total".into(), counts.iter().map(|(_, n)| n).sum::<usize>().to_string()]);
                }
                rows
            }
            Summary::Stats { dimension, categories } => {
                let mut header = vec![dimension.to_string(), "count".into()];
                for m in METRICS {
                    header.push(format!("{m}_mean"));
                    header.push(format!("{m}_max"));
                }
                let mut rows = vec![header];
                for c in categories {
                    let mut row = vec![c.category.clone(), c.count.to_string()];
                    for m in &c.metrics {
                        row.push(num(m.mean));
                        row.push(num(m.max));
                    }
                    rows.push(row);
                }
                rows
            }
            Summary::Crosstab { attributes, outcomes, counts } => {
                let mut header = vec!["attribute".to_string()];
                header.extend(outcomes.iter().map(|o| o.as_str().to_string()));
                if with_totals {
                    header.push("total".into());
                }
                let mut rows = vec![header];
                for (a, row) in attributes.iter().zip(counts) {
                    let mut line = vec![a.as_str().to_string()];
                    line.extend(row.iter().map(usize::to_string));
                    if with_totals {
                        line.push(row.iter().sum::<usize>().to_string());
                    }
                    rows.push(line);
                }
                if with_totals {
                    let mut line = vec!["total".to_string()];
                    let cols: Vec<usize> = (0..outcomes.len()).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
                    line.extend(cols.iter().map(usize::to_string));
                    line.push(cols.iter().sum::<usize>().to_string());
                    rows.push(line);
                }
                rows
            }
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => table_text(&self.rows(true)),
            Format::Csv => table_csv(&self.rows(false)),
            Format::Jsonl => {
                let mut out = String::new();
                for value in self.json_rows() {
                    writeln!(out, "{value}").expect("writing to a string");
                }
                out
            }
        }
    }

    fn json_rows(&self) -> Vec<serde_json::Value> {
        use serde_json::json;
        match self {
            Summary::Counts { dimension, counts } => {
                counts.iter().map(|(k, n)| json!({ *dimension: k, "count": n })).collect()
            }
            Summary::Stats { dimension, categories } => categories
                .iter()
                .map(|c| {
                    let mut obj = serde_json::Map::new();
                    obj.insert(dimension.to_string(), json!(c.category));
                    obj.insert("count".into(), json!(c.count));
                    for (name, m) in METRICS.iter().zip(&c.metrics) {
                        obj.insert(name.to_string(), json!({"mean": m.mean, "max": m.max}));
                    }
                    serde_json::Value::Object(obj)
                })
                .collect(),
            Summary::Crosstab { attributes, outcomes, counts } => attributes
                .iter()
                .zip(counts)
                .flat_map(|(a, row)| {
                    outcomes.iter().zip(row).map(move |(o, n)| json!({"attribute": a, "outcome": o, "count": n}))
                })
                .collect(),
        }
    }
}
