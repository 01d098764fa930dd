//! CSV ingestion into immutable tables of typed cells.
//!
//! Every cell keeps its raw text verbatim. Null matching, type inference and
//! declared-type parsing are recorded per cell; a value that fails to parse
//! under its declared type is data (see [`CellContent::Unparsable`]), not an
//! ingestion error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::schema::{ConstraintSchema, NullPolicy, TableConstraint};
use crate::value::{is_float_form, is_integer_form, parse_boolean, parse_iso_date, DeclaredType, Value};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("table {table}: input is empty (no header row)")]
    Empty { table: String },
    #[error("table {table}: row {row} has {actual} fields, expected {expected}")]
    Ragged { table: String, row: usize, expected: usize, actual: usize },
    #[error("table {table}: header does not match schema (unexpected: [{}], missing: [{}])", unexpected.join(", "), missing.join(", "))]
    HeaderMismatch { table: String, unexpected: Vec<String>, missing: Vec<String> },
    #[error("table {table}: duplicate header column {column:?}")]
    DuplicateHeader { table: String, column: String },
    #[error("table {table}: {source}")]
    Csv {
        table: String,
        #[source]
        source: csv::Error,
    },
    #[error("duplicate table name {0:?}")]
    DuplicateTable(String),
    #[error("schema table {0:?} has no data file")]
    MissingTable(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Type guessed from a cell's raw text, independent of any schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InferredType {
    Integer,
    Float,
    Boolean,
    Date,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inference {
    pub inferred_type: InferredType,
    /// An integer-looking value with a significant leading zero, which a
    /// numeric coercion would destroy.
    pub leading_zero_numeric: bool,
}

/// Classifies a non-null raw value: integer, float, boolean, date, then text.
pub fn infer_cell_type(raw: &str) -> Inference {
    let inferred_type = if is_integer_form(raw) {
        InferredType::Integer
    } else if is_float_form(raw) {
        InferredType::Float
    } else if parse_boolean(raw).is_some() {
        InferredType::Boolean
    } else if parse_iso_date(raw).is_some() {
        InferredType::Date
    } else {
        InferredType::Text
    };
    let leading_zero_numeric = inferred_type == InferredType::Integer && raw.starts_with('0') && raw.len() > 1;
    Inference { inferred_type, leading_zero_numeric }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellContent {
    /// Raw text matched a null token.
    Null,
    Parsed(Value),
    /// Raw text does not parse under the declared type; the message says why.
    Unparsable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub raw: String,
    pub content: CellContent,
    /// `None` for null cells.
    pub inference: Option<Inference>,
}

impl Cell {
    pub fn new(raw: &str, null_policy: &NullPolicy, declared: Option<DeclaredType>) -> Cell {
        if null_policy.is_null(raw) {
            return Cell { raw: raw.to_string(), content: CellContent::Null, inference: None };
        }
        let inference = infer_cell_type(raw);
        let content = match declared {
            Some(ty) => match ty.parse(raw) {
                Ok(v) => CellContent::Parsed(v),
                Err(msg) => CellContent::Unparsable(msg),
            },
            None => CellContent::Parsed(parse_inferred(raw, inference.inferred_type)),
        };
        Cell { raw: raw.to_string(), content, inference: Some(inference) }
    }

    pub fn is_null(&self) -> bool {
        matches!(self.content, CellContent::Null)
    }

    pub fn parsed(&self) -> Option<&Value> {
        match &self.content {
            CellContent::Parsed(v) => Some(v),
            _ => None,
        }
    }

    pub fn inferred_type(&self) -> Option<InferredType> {
        self.inference.map(|i| i.inferred_type)
    }

    pub fn leading_zero_numeric(&self) -> bool {
        self.inference.is_some_and(|i| i.leading_zero_numeric)
    }

    /// Raw text with every null token collapsed to `None`.
    pub fn canonical(&self) -> Option<&str> {
        if self.is_null() {
            None
        } else {
            Some(&self.raw)
        }
    }
}

fn parse_inferred(raw: &str, ty: InferredType) -> Value {
    let declared = match ty {
        InferredType::Integer => DeclaredType::Integer,
        InferredType::Float => DeclaredType::Float,
        InferredType::Boolean => DeclaredType::Boolean,
        InferredType::Date => DeclaredType::Date,
        InferredType::Text => DeclaredType::Text,
    };
    declared
        .parse(raw)
        .or_else(|_| DeclaredType::Float.parse(raw))
        .unwrap_or_else(|_| Value::Text(raw.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn cell(&self, row: usize, column: usize) -> &Cell {
        &self.rows[row][column]
    }

    pub fn column_cells(&self, column: usize) -> impl Iterator<Item = (usize, &Cell)> {
        self.rows.iter().enumerate().map(move |(r, row)| (r, &row[column]))
    }

    /// Writes the table back out in the input dialect.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        // Writing into a Vec cannot fail.
        writer.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            writer.write_record(row.iter().map(|c| c.raw.as_str())).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input stays utf-8")
    }
}

/// Loads one table from CSV text. When `schema` is given the header must
/// match its column names in order and cells are parsed per declared type.
pub fn load_table(
    csv_text: &str,
    name: &str,
    null_policy: &NullPolicy,
    schema: Option<&TableConstraint>,
) -> Result<Table, IngestError> {
    let csv_err = |source| IngestError::Csv { table: name.to_string(), source };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let mut records = reader.records();

    let header: Vec<String> = match records.next() {
        Some(rec) => rec.map_err(csv_err)?.iter().map(str::to_string).collect(),
        None => return Err(IngestError::Empty { table: name.to_string() }),
    };
    for (i, h) in header.iter().enumerate() {
        if header[..i].contains(h) {
            return Err(IngestError::DuplicateHeader { table: name.to_string(), column: h.clone() });
        }
    }

    let declared: Vec<Option<DeclaredType>> = match schema {
        Some(tc) => {
            let expected = tc.column_names();
            if header.iter().map(String::as_str).ne(expected.iter().copied()) {
                return Err(IngestError::HeaderMismatch {
                    table: name.to_string(),
                    unexpected: header.iter().filter(|h| !expected.contains(&h.as_str())).cloned().collect(),
                    missing: expected.iter().filter(|e| !header.iter().any(|h| h == *e)).map(|e| e.to_string()).collect(),
                });
            }
            tc.columns.iter().map(|c| Some(c.declared_type)).collect()
        }
        None => vec![None; header.len()],
    };

    let mut rows = Vec::new();
    for (row_index, record) in records.enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() != header.len() {
            return Err(IngestError::Ragged {
                table: name.to_string(),
                row: row_index,
                expected: header.len(),
                actual: record.len(),
            });
        }
        rows.push(record.iter().zip(&declared).map(|(raw, ty)| Cell::new(raw, null_policy, *ty)).collect());
    }
    Ok(Table { name: name.to_string(), header, rows })
}

/// Name-indexed collection of tables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    tables: BTreeMap<String, Table>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, table: Table) -> Result<(), IngestError> {
        if self.tables.contains_key(&table.name) {
            return Err(IngestError::DuplicateTable(table.name));
        }
        self.tables.insert(table.name.clone(), table);
        Ok(())
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.tables.values()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Loads a CSV file or every `*.csv` file in a directory; the file stem
    /// names the table. Tables named in the schema are bound to it; every
    /// schema table must be present.
    pub fn load_path(path: &Path, schema: &ConstraintSchema) -> Result<Dataset, IngestError> {
        let io_err = |path: &Path, source| IngestError::Io { path: path.to_path_buf(), source };
        let mut files = Vec::new();
        if path.is_dir() {
            for entry in std::fs::read_dir(path).map_err(|e| io_err(path, e))? {
                let p = entry.map_err(|e| io_err(path, e))?.path();
                if p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("csv")) {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }

        let mut dataset = Dataset::new();
        for file in files {
            let name = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let text = std::fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
            let table = load_table(&text, &name, &schema.null_policy, schema.table(&name))?;
            dataset.insert(table)?;
        }
        if let Some(missing) = schema.tables.iter().find(|t| dataset.table(&t.name).is_none()) {
            return Err(IngestError::MissingTable(missing.name.clone()));
        }
        Ok(dataset)
    }
}
