//! Label vocabularies for the two classification dimensions and issue scoping.
//!
//! Every enum here serializes to the lowercase spelling used in JSON-Lines
//! reports and ticket files, and parses back from the same spelling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Where an issue lives: one cell, across rows, across columns of one row,
/// or across tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Cell,
    InterRow,
    InterColumn,
    InterTable,
}

impl Scope {
    pub const ALL: [Scope; 4] = [Scope::Cell, Scope::InterRow, Scope::InterColumn, Scope::InterTable];

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Cell => "cell",
            Scope::InterRow => "inter_row",
            Scope::InterColumn => "inter_column",
            Scope::InterTable => "inter_table",
        }
    }
}

/// Attribute-dimension label: what an issue *is*.
///
/// The first four variants are integrity issues, the last four data smells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Missing,
    Invalid,
    Conflict,
    Duplicate,
    Believability,
    Consistency,
    Syntactic,
    Encoding,
}

impl Attribute {
    /// Reporting order: integrity families first, then smells.
    pub const ALL: [Attribute; 8] = [
        Attribute::Missing,
        Attribute::Invalid,
        Attribute::Conflict,
        Attribute::Duplicate,
        Attribute::Believability,
        Attribute::Consistency,
        Attribute::Syntactic,
        Attribute::Encoding,
    ];

    pub const INTEGRITY: [Attribute; 4] =
        [Attribute::Missing, Attribute::Invalid, Attribute::Conflict, Attribute::Duplicate];

    pub fn is_smell(self) -> bool {
        matches!(
            self,
            Attribute::Believability | Attribute::Consistency | Attribute::Syntactic | Attribute::Encoding
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Missing => "missing",
            Attribute::Invalid => "invalid",
            Attribute::Conflict => "conflict",
            Attribute::Duplicate => "duplicate",
            Attribute::Believability => "believability",
            Attribute::Consistency => "consistency",
            Attribute::Syntactic => "syntactic",
            Attribute::Encoding => "encoding",
        }
    }

    /// Integrity attributes that may occur at `scope`.
    pub fn legal_at(scope: Scope) -> &'static [Attribute] {
        match scope {
            Scope::Cell => &[Attribute::Missing, Attribute::Invalid],
            Scope::InterRow => &[Attribute::Missing, Attribute::Conflict, Attribute::Duplicate],
            Scope::InterColumn => &[Attribute::Conflict],
            Scope::InterTable => &[Attribute::Missing, Attribute::Conflict],
        }
    }
}

/// Outcome-dimension label: which constraint family an issue breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutcomeLabel {
    #[serde(rename = "pattern")]
    PatternViolation,
    #[serde(rename = "range")]
    RangeViolation,
    #[serde(rename = "rule")]
    RuleViolation,
    #[serde(rename = "knowledge")]
    KnowledgeViolation,
    /// Reserved for data smells, which do not break a declared constraint.
    #[serde(rename = "none")]
    NoneSmell,
}

impl OutcomeLabel {
    pub const ALL: [OutcomeLabel; 5] = [
        OutcomeLabel::PatternViolation,
        OutcomeLabel::RangeViolation,
        OutcomeLabel::RuleViolation,
        OutcomeLabel::KnowledgeViolation,
        OutcomeLabel::NoneSmell,
    ];

    pub const INTEGRITY: [OutcomeLabel; 4] = [
        OutcomeLabel::PatternViolation,
        OutcomeLabel::RangeViolation,
        OutcomeLabel::RuleViolation,
        OutcomeLabel::KnowledgeViolation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeLabel::PatternViolation => "pattern",
            OutcomeLabel::RangeViolation => "range",
            OutcomeLabel::RuleViolation => "rule",
            OutcomeLabel::KnowledgeViolation => "knowledge",
            OutcomeLabel::NoneSmell => "none",
        }
    }
}

/// Which single-cell check an invalid value failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolatedKind {
    Pattern,
    Type,
    Range,
}

impl ViolatedKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolatedKind::Pattern => "pattern",
            ViolatedKind::Type => "type",
            ViolatedKind::Range => "range",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {vocabulary} label {word:?}")]
pub struct UnknownLabel {
    pub vocabulary: &'static str,
    pub word: String,
}

fn lookup<T: Copy>(
    vocabulary: &'static str,
    word: &str,
    all: &[T],
    name: impl Fn(T) -> &'static str,
) -> Result<T, UnknownLabel> {
    let normalized = word.trim().to_ascii_lowercase().replace('-', "_");
    all.iter()
        .copied()
        .find(|candidate| name(*candidate) == normalized)
        .ok_or_else(|| UnknownLabel { vocabulary, word: word.to_string() })
}

impl FromStr for Scope {
    type Err = UnknownLabel;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        lookup("scope", s, &Scope::ALL, Scope::as_str)
    }
}

impl FromStr for Attribute {
    type Err = UnknownLabel;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        lookup("attribute", s, &Attribute::ALL, Attribute::as_str)
    }
}

impl FromStr for OutcomeLabel {
    type Err = UnknownLabel;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        lookup("outcome", s, &OutcomeLabel::ALL, OutcomeLabel::as_str)
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for ViolatedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
