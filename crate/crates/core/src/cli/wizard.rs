//! Interactive labeling: walks the attribute decision tree and computes the
//! outcome, so an impermissible pair can never be entered.

use std::io::{self, BufRead, Write};

use crate::classify::align;
use crate::taxonomy::{Attribute, OutcomeLabel, Scope, ViolatedKind};
use crate::triage::Ticket;

#[derive(Debug, thiserror::Error)]
pub enum WizardError {
    #[error("input ended before the session finished")]
    Eof,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Ticket metadata that is not part of the label itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TicketMeta {
    pub id: String,
    pub severity: u8,
    pub priority: u8,
    pub days_to_fix: f64,
    pub comment_number: u64,
}

/// A menu entry: the value, its display label, and extra accepted spellings.
struct Choice<T> {
    value: T,
    label: &'static str,
    aliases: &'static [&'static str],
}

fn choice<T>(value: T, label: &'static str, aliases: &'static [&'static str]) -> Choice<T> {
    Choice { value, label, aliases }
}

fn normalize(answer: &str) -> String {
    answer.trim().to_ascii_lowercase().replace(['-', ' '], "_")
}

fn ask<T: Copy>(
    input: &mut dyn BufRead,
    prompts: &mut dyn Write,
    question: &str,
    choices: &[Choice<T>],
) -> Result<T, WizardError> {
    loop {
        writeln!(prompts, "{question}")?;
        for (i, c) in choices.iter().enumerate() {
            writeln!(prompts, "  {}) {}", i + 1, c.label)?;
        }
        write!(prompts, "> ")?;
        prompts.flush()?;

        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            return Err(WizardError::Eof);
        }
        let answer = normalize(&line);
        if let Ok(n) = answer.parse::<usize>() {
            if (1..=choices.len()).contains(&n) {
                return Ok(choices[n - 1].value);
            }
        }
        let hit = choices
            .iter()
            .find(|c| normalize(c.label) == answer || c.aliases.iter().any(|a| normalize(a) == answer));
        if let Some(c) = hit {
            return Ok(c.value);
        }
        writeln!(prompts, "Please answer with one of the listed numbers or labels.")?;
    }
}

fn scope_choice(scope: Scope) -> Choice<Scope> {
    match scope {
        Scope::Cell => choice(scope, "cell", &[]),
        Scope::InterRow => choice(scope, "inter-row", &["row"]),
        Scope::InterColumn => choice(scope, "inter-column", &["column"]),
        Scope::InterTable => choice(scope, "inter-table", &["table"]),
    }
}

fn attribute_choice(attribute: Attribute) -> Choice<Attribute> {
    choice(attribute, attribute.as_str(), &[])
}

/// The label half of a ticket, as chosen in the session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label {
    pub attribute: Attribute,
    pub outcome: OutcomeLabel,
}

/// Runs the question sequence. Prompts go to `prompts`; nothing else is written.
pub fn ask_label(input: &mut dyn BufRead, prompts: &mut dyn Write) -> Result<Label, WizardError> {
    let integrity = ask(
        input,
        prompts,
        "Does the issue break an integrity constraint?",
        &[choice(true, "yes", &["y"]), choice(false, "no", &["n"])],
    )?;

    if !integrity {
        let smells: Vec<Choice<Attribute>> =
            Attribute::ALL.into_iter().filter(|a| a.is_smell()).map(attribute_choice).collect();
        let attribute = ask(input, prompts, "Which kind of data smell is it?", &smells)?;
        return Ok(Label { attribute, outcome: OutcomeLabel::NoneSmell });
    }

    let scopes: Vec<Choice<Scope>> = Scope::ALL.into_iter().map(scope_choice).collect();
    let scope = ask(input, prompts, "Where does the issue live?", &scopes)?;

    let attributes: Vec<Choice<Attribute>> =
        Attribute::legal_at(scope).iter().copied().map(attribute_choice).collect();
    let attribute = ask(input, prompts, "What is wrong with the data?", &attributes)?;

    let violated = if scope == Scope::Cell && attribute == Attribute::Invalid {
        Some(ask(
            input,
            prompts,
            "Which check does the value fail?",
            &[
                choice(ViolatedKind::Pattern, "pattern/type", &["pattern", "type"]),
                choice(ViolatedKind::Range, "range", &["domain"]),
            ],
        )?)
    } else {
        None
    };

    let outcome = align(attribute, scope, violated).expect("menus only offer legal combinations");
    writeln!(prompts, "Outcome: {outcome}")?;
    Ok(Label { attribute, outcome })
}

pub fn run_wizard(input: &mut dyn BufRead, prompts: &mut dyn Write, meta: &TicketMeta) -> Result<Ticket, WizardError> {
    let label = ask_label(input, prompts)?;
    Ok(Ticket {
        id: meta.id.clone(),
        attribute: label.attribute,
        outcome: label.outcome,
        severity: meta.severity,
        priority: meta.priority,
        days_to_fix: meta.days_to_fix,
        comment_number: meta.comment_number,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(answers: &str) -> Result<Label, WizardError> {
        ask_label(&mut answers.as_bytes(), &mut Vec::new())
    }

    #[test]
    fn integrity_paths() {
        assert_eq!(
            label("yes\ninter-row\nduplicate\n").unwrap(),
            Label { attribute: Attribute::Duplicate, outcome: OutcomeLabel::RuleViolation }
        );
        assert_eq!(
            label("1\ncell\ninvalid\nrange\n").unwrap(),
            Label { attribute: Attribute::Invalid, outcome: OutcomeLabel::RangeViolation }
        );
        assert_eq!(
            label("y\n1\n2\n1\n").unwrap(),
            Label { attribute: Attribute::Invalid, outcome: OutcomeLabel::PatternViolation }
        );
        assert_eq!(
            label("yes\ninter table\nmissing\n").unwrap(),
            Label { attribute: Attribute::Missing, outcome: OutcomeLabel::KnowledgeViolation }
        );
    }

    #[test]
    fn smell_path() {
        assert_eq!(
            label("no\nbelievability\n").unwrap(),
            Label { attribute: Attribute::Believability, outcome: OutcomeLabel::NoneSmell }
        );
    }

    #[test]
    fn illegal_answers_are_asked_again() {
        let mut prompts = Vec::new();
        let got = ask_label(&mut "maybe\nyes\ninter-column\nduplicate\n7\nconflict\n".as_bytes(), &mut prompts).unwrap();
        assert_eq!(got, Label { attribute: Attribute::Conflict, outcome: OutcomeLabel::RuleViolation });
        let text = String::from_utf8(prompts).unwrap();
        assert_eq!(text.matches("Please answer").count(), 3);
        assert!(!text.contains("2) duplicate"));
    }

    #[test]
    fn eof_aborts() {
        assert!(matches!(label("yes\ncell\n"), Err(WizardError::Eof)));
        assert!(matches!(label(""), Err(WizardError::Eof)));
    }
}
