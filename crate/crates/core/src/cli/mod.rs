//! The `dq` command line.
//!
//! Exit codes: 0 no findings, 1 findings emitted, 2 usage or configuration
//! error, 3 data or schema load error. Machine output goes to stdout, prose
//! to stderr.

pub mod wizard;

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classify::label_dataset;
use crate::detectors::{detect_all, Issue};
use crate::ingest::Dataset;
use crate::schema::{parse_schema_file, ConstraintSchema};
use crate::smells::{detect_smells, SmellFinding, SmellParams};
use crate::taxonomy::{Attribute, OutcomeLabel};
use crate::triage::{
    parse_tickets, priority_ordinal, severity_ordinal, summarize, validate_ticket_alignment, Format, Mode,
};
use wizard::{run_wizard, TicketMeta, WizardError};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LOAD: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dq", version, about = "Validate tabular data, label quality issues, and summarize issue tickets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report integrity issues (missing, invalid, duplicate, conflict).
    Validate(DataArgs),
    /// Report data smells in cells not already reported as issues.
    Smells(DataArgs),
    /// Report issues with their outcome labels, followed by smells.
    Classify(DataArgs),
    /// Summarize a labeled ticket file.
    Stats(StatsArgs),
    /// Label one issue interactively and print it as a ticket record.
    Wizard(WizardArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Constraint schema (JSON).
    #[arg(long)]
    schema: PathBuf,
    /// A CSV file or a directory of CSV files, one table per file.
    #[arg(long)]
    data: PathBuf,
    /// Smell thresholds as inline JSON or a path to a JSON file.
    #[arg(long, value_name = "JSON")]
    smell_params: Option<String>,
    /// Expected-keys file, as TABLE=PATH or a bare PATH when only one table takes one.
    #[arg(long, value_name = "[TABLE=]PATH")]
    expected_keys: Vec<String>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Ticket file (CSV or JSON-Lines).
    #[arg(long)]
    tickets: PathBuf,
    #[arg(long, default_value = "attribute_dist")]
    mode: Mode,
    #[arg(long, default_value = "text")]
    format: Format,
}

#[derive(Debug, Args)]
struct WizardArgs {
    #[arg(long, default_value = "ticket-1")]
    id: String,
    #[arg(long, default_value = "Medium", value_parser = parse_severity)]
    severity: u8,
    #[arg(long, default_value = "Medium", value_parser = parse_priority)]
    priority: u8,
    #[arg(long, default_value_t = 0.0, value_parser = parse_days)]
    days_to_fix: f64,
    #[arg(long, default_value_t = 0)]
    comments: u64,
}

fn parse_severity(s: &str) -> Result<u8, String> {
    severity_ordinal(s).ok_or_else(|| format!("unknown severity {s:?}, expected Low, Medium, High or Critical"))
}

fn parse_priority(s: &str) -> Result<u8, String> {
    priority_ordinal(s).ok_or_else(|| format!("unknown priority {s:?}, expected Lowest, Low, Medium, High or Highest"))
}

fn parse_days(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(d) if d.is_finite() && d >= 0.0 => Ok(d),
        _ => Err(format!("days to fix must be a non-negative number, got {s:?}")),
    }
}

/// A failure carrying the exit code it maps to.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn load(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_LOAD, message: message.to_string() }
}

/// Runs the command line with explicit streams; returns the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{rendered}");
                EXIT_CLEAN
            };
        }
    };
    let result = match cli.command {
        Command::Validate(args) => validate(&args, stdout, stderr),
        Command::Smells(args) => smells(&args, stdout, stderr),
        Command::Classify(args) => classify(&args, stdout, stderr),
        Command::Stats(args) => stats(&args, stdout, stderr),
        Command::Wizard(args) => wizard_session(&args, stdin, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure { code: EXIT_LOAD, message: format!("write failed: {e}") }
}

// ---------------------------------------------------------------------------
// Dataset commands
// ---------------------------------------------------------------------------

fn smell_params(raw: Option<&str>) -> Result<Option<SmellParams>, Failure> {
    let Some(raw) = raw else { return Ok(None) };
    let text = if raw.trim_start().starts_with('{') {
        raw.to_string()
    } else {
        std::fs::read_to_string(raw).map_err(|e| usage(format!("cannot read smell parameters {raw}: {e}")))?
    };
    let params: SmellParams =
        serde_json::from_str(&text).map_err(|e| usage(format!("bad smell parameters: {e}")))?;
    params.validate().map_err(|e| usage(format!("bad smell parameters: {e}")))?;
    Ok(Some(params))
}

/// Applies `--expected-keys` overrides. A bare path goes to the single table
/// that already declares expected keys, or else to the single keyed table.
fn apply_expected_keys(schema: &mut ConstraintSchema, overrides: &[String]) -> Result<(), Failure> {
    for arg in overrides {
        let (table, path) = match arg.split_once('=') {
            Some((t, p)) if schema.table(t).is_some() => (t.to_string(), p),
            _ => {
                let declaring: Vec<&str> =
                    schema.tables.iter().filter(|t| t.expected_keys.is_some()).map(|t| t.name.as_str()).collect();
                let keyed: Vec<&str> =
                    schema.tables.iter().filter(|t| !t.key.is_empty()).map(|t| t.name.as_str()).collect();
                let candidates = if declaring.is_empty() { keyed } else { declaring };
                match candidates.as_slice() {
                    [only] => (only.to_string(), arg.as_str()),
                    _ => {
                        return Err(usage(format!(
                            "--expected-keys {arg}: cannot tell which table it is for, use TABLE=PATH"
                        )))
                    }
                }
            }
        };
        let tc = schema.tables.iter_mut().find(|t| t.name == table).expect("table looked up above");
        if tc.key.is_empty() {
            return Err(usage(format!("--expected-keys: table {table} declares no key")));
        }
        let path = Path::new(path);
        let absolute = if path.is_absolute() {
            path.to_path_buf()
        } else {
            std::env::current_dir().map_err(|e| usage(e.to_string()))?.join(path)
        };
        tc.expected_keys = Some(absolute);
    }
    Ok(())
}

struct Loaded {
    schema: ConstraintSchema,
    dataset: Dataset,
    params: Option<SmellParams>,
}

fn load_inputs(args: &DataArgs) -> Result<Loaded, Failure> {
    let params = smell_params(args.smell_params.as_deref())?;
    let mut schema = parse_schema_file(&args.schema).map_err(|e| load(format!("schema {}: {e}", args.schema.display())))?;
    apply_expected_keys(&mut schema, &args.expected_keys)?;
    let dataset = Dataset::load_path(&args.data, &schema).map_err(|e| load(format!("data {}: {e}", args.data.display())))?;
    Ok(Loaded { schema, dataset, params })
}

fn write_jsonl<T: Serialize>(out: &mut dyn Write, items: &[T]) -> Result<(), Failure> {
    for item in items {
        let line = serde_json::to_string(item).expect("records serialize");
        writeln!(out, "{line}").map_err(io_failure)?;
    }
    Ok(())
}

/// Count of issues per (scope, attribute), printed as an aligned table.
fn issue_summary(issues: &[Issue], smells: &[SmellFinding], err: &mut dyn Write) -> Result<(), Failure> {
    let mut rows: Vec<(String, String, usize)> = Vec::new();
    let mut bump = |scope: String, attribute: String| match rows.iter_mut().find(|r| r.0 == scope && r.1 == attribute) {
        Some(r) => r.2 += 1,
        None => rows.push((scope, attribute, 1)),
    };
    for i in issues {
        bump(i.scope.to_string(), i.attribute.to_string());
    }
    for s in smells {
        bump("smell".into(), Attribute::from(s.kind).to_string());
    }
    let total = issues.len() + smells.len();
    if total == 0 {
        writeln!(err, "no findings").map_err(io_failure)?;
        return Ok(());
    }
    let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("scope".len());
    let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max("attribute".len());
    let mut text = format!("{:<w0$}  {:<w1$}  count\n", "scope", "attribute");
    for (scope, attribute, n) in &rows {
        text.push_str(&format!("{scope:<w0$}  {attribute:<w1$}  {n:>5}\n"));
    }
    text.push_str(&format!("{:<w0$}  {:<w1$}  {total:>5}\n", "total", ""));
    write!(err, "{text}").map_err(io_failure)
}

fn exit_for(count: usize) -> i32 {
    if count == 0 {
        EXIT_CLEAN
    } else {
        EXIT_FINDINGS
    }
}

fn validate(args: &DataArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let inputs = load_inputs(args)?;
    let issues = detect_all(&inputs.dataset, &inputs.schema).map_err(load)?;
    write_jsonl(out, &issues)?;
    issue_summary(&issues, &[], err)?;
    Ok(exit_for(issues.len()))
}

fn scan_smells(inputs: &Loaded) -> Result<Vec<SmellFinding>, Failure> {
    let issues = detect_all(&inputs.dataset, &inputs.schema).map_err(load)?;
    let params = inputs.params.or(inputs.schema.smell_params).unwrap_or_default();
    Ok(detect_smells(&inputs.dataset, &inputs.schema, &params, &issues))
}

fn smells(args: &DataArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let inputs = load_inputs(args)?;
    let found = scan_smells(&inputs)?;
    write_jsonl(out, &found)?;
    issue_summary(&[], &found, err)?;
    Ok(exit_for(found.len()))
}

/// A smell as printed by `classify`: the smell record plus its outcome.
#[derive(Serialize)]
struct LabeledSmell<'a> {
    #[serde(flatten)]
    finding: &'a SmellFinding,
    outcome: OutcomeLabel,
}

fn classify(args: &DataArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let inputs = load_inputs(args)?;
    let labeled = label_dataset(&inputs.dataset, &inputs.schema, inputs.params.as_ref()).map_err(|e| match e {
        crate::classify::ClassifyError::Detect(d) => load(d),
        contract => Failure { code: EXIT_USAGE, message: contract.to_string() },
    })?;
    write_jsonl(out, &labeled.issues)?;
    let smells: Vec<LabeledSmell> =
        labeled.smells.iter().map(|finding| LabeledSmell { finding, outcome: OutcomeLabel::NoneSmell }).collect();
    write_jsonl(out, &smells)?;
    issue_summary(&labeled.issues, &labeled.smells, err)?;
    Ok(exit_for(labeled.issues.len() + labeled.smells.len()))
}

// ---------------------------------------------------------------------------
// Tickets
// ---------------------------------------------------------------------------

fn stats(args: &StatsArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let text = std::fs::read_to_string(&args.tickets)
        .map_err(|e| load(format!("cannot read tickets {}: {e}", args.tickets.display())))?;
    let tickets = parse_tickets(&text).map_err(|e| load(format!("{}: {e}", args.tickets.display())))?;
    let offending = validate_ticket_alignment(&tickets);
    if !offending.is_empty() {
        writeln!(
            err,
            "warning: {} ticket(s) carry an impermissible (attribute, outcome) pair: {}",
            offending.len(),
            offending.join(", ")
        )
        .map_err(io_failure)?;
    }
    let summary = summarize(&tickets, args.mode).map_err(|e| usage(e.to_string()))?;
    write!(out, "{}", summary.render(args.format)).map_err(io_failure)?;
    writeln!(err, "{} tickets, mode {}", tickets.len(), args.mode.as_str()).map_err(io_failure)?;
    Ok(EXIT_CLEAN)
}

fn wizard_session(
    args: &WizardArgs,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let meta = TicketMeta {
        id: args.id.clone(),
        severity: args.severity,
        priority: args.priority,
        days_to_fix: args.days_to_fix,
        comment_number: args.comments,
    };
    match run_wizard(input, err, &meta) {
        Ok(ticket) => {
            write_jsonl(out, &[ticket.to_raw()])?;
            Ok(EXIT_CLEAN)
        }
        Err(WizardError::Eof) => Err(usage("input ended before the wizard finished; nothing recorded")),
        Err(WizardError::Io(e)) => Err(io_failure(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str], stdin: &str) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("dq").chain(args.iter().copied());
        let code = run(argv, &mut stdin.as_bytes(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_args(&[], "").0, EXIT_USAGE);
        assert_eq!(run_args(&["frobnicate"], "").0, EXIT_USAGE);
        assert_eq!(run_args(&["stats", "--tickets", "x.csv", "--mode", "bogus"], "").0, EXIT_USAGE);
        let (code, out, _) = run_args(&["--help"], "");
        assert_eq!(code, EXIT_CLEAN);
        assert!(out.contains("validate"));
    }

    #[test]
    fn missing_files_exit_3() {
        let (code, out, err) = run_args(&["validate", "--schema", "/nonexistent/s.json", "--data", "/nonexistent"], "");
        assert_eq!(code, EXIT_LOAD);
        assert!(out.is_empty());
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn bad_smell_params_exit_2() {
        assert!(smell_params(Some("{\"min_n\": 0}")).is_err());
        assert!(smell_params(Some("{\"bogus\": 1}")).is_err());
        assert_eq!(smell_params(Some("{\"iqr_k\": 3}")).ok().flatten().unwrap().iqr_k, 3.0);
    }

    #[test]
    fn wizard_emits_one_ticket() {
        let (code, out, err) = run_args(&["wizard", "--id", "T-9", "--severity", "critical"], "yes\ninter-row\nduplicate\n");
        assert_eq!(code, EXIT_CLEAN);
        assert_eq!(out.lines().count(), 1);
        let record: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(record["attribute"], "duplicate");
        assert_eq!(record["outcome"], "rule");
        assert_eq!(record["severity"], "Critical");
        assert!(err.contains("integrity constraint"));

        let (code, out, _) = run_args(&["wizard"], "yes\ncell\n");
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
    }
}
