//! Assigns each integrity issue the kind of constraint it broke, and keeps
//! every (attribute, outcome) pair inside the permitted set.

use crate::detectors::{detect_all, DetectError, Issue};
use crate::ingest::Dataset;
use crate::schema::ConstraintSchema;
use crate::smells::{detect_smells, SmellFinding, SmellParams};
use crate::taxonomy::{Attribute, OutcomeLabel, Scope, ViolatedKind};

/// The only (attribute, outcome) pairings that may appear together.
pub const PERMITTED_PAIRS: [(Attribute, OutcomeLabel); 9] = [
    (Attribute::Invalid, OutcomeLabel::PatternViolation),
    (Attribute::Invalid, OutcomeLabel::RangeViolation),
    (Attribute::Missing, OutcomeLabel::RangeViolation),
    (Attribute::Missing, OutcomeLabel::RuleViolation),
    (Attribute::Conflict, OutcomeLabel::RuleViolation),
    (Attribute::Duplicate, OutcomeLabel::RuleViolation),
    (Attribute::Missing, OutcomeLabel::KnowledgeViolation),
    (Attribute::Conflict, OutcomeLabel::KnowledgeViolation),
    (Attribute::Believability, OutcomeLabel::NoneSmell),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContractError {
    #[error("attribute {attribute} cannot occur at {scope} scope")]
    IllegalScope { attribute: Attribute, scope: Scope },
    #[error("invalid cell issue without a violated check")]
    MissingViolatedKind,
    #[error("{0} is a data smell, not an integrity issue")]
    SmellAttribute(Attribute),
    #[error("pair ({attribute}, {outcome}) is not permitted")]
    ForbiddenPair { attribute: Attribute, outcome: OutcomeLabel },
}

/// Outcome label for an issue. Total over the legal (attribute, scope)
/// combinations; anything else is a contract violation.
pub fn align(
    attribute: Attribute,
    scope: Scope,
    violated: Option<ViolatedKind>,
) -> Result<OutcomeLabel, ContractError> {
    use Attribute::*;
    use OutcomeLabel::*;
    if attribute.is_smell() {
        return Err(ContractError::SmellAttribute(attribute));
    }
    Ok(match (scope, attribute) {
        (Scope::Cell, Invalid) => match violated.ok_or(ContractError::MissingViolatedKind)? {
            ViolatedKind::Pattern | ViolatedKind::Type => PatternViolation,
            ViolatedKind::Range => RangeViolation,
        },
        (Scope::Cell, Missing) => RangeViolation,
        (Scope::InterRow, Missing | Duplicate | Conflict) => RuleViolation,
        (Scope::InterColumn, Conflict) => RuleViolation,
        (Scope::InterTable, Missing | Conflict) => KnowledgeViolation,
        _ => return Err(ContractError::IllegalScope { attribute, scope }),
    })
}

/// Whether a pair may be emitted. Smell kinds are emitted with the `none`
/// outcome; integrity attributes must match the permitted table.
pub fn is_permitted(attribute: Attribute, outcome: OutcomeLabel) -> bool {
    if attribute.is_smell() {
        return outcome == OutcomeLabel::NoneSmell;
    }
    PERMITTED_PAIRS.contains(&(attribute, outcome))
}

/// Fills the outcome of every issue, failing on the first contract breach.
pub fn label_issues(issues: &mut [Issue]) -> Result<(), ContractError> {
    for issue in issues.iter_mut() {
        let outcome = align(issue.attribute, issue.scope, issue.violated_kind)?;
        if !is_permitted(issue.attribute, outcome) {
            return Err(ContractError::ForbiddenPair { attribute: issue.attribute, outcome });
        }
        issue.outcome = Some(outcome);
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("internal labeling contract broken: {0}")]
    Contract(#[from] ContractError),
}

/// Labeled issues plus the smells found in the cells they leave untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub issues: Vec<Issue>,
    pub smells: Vec<SmellFinding>,
}

/// Detects, labels and smell-scans a dataset. `params` overrides the
/// schema's smell parameters when given.
pub fn label_dataset(
    dataset: &Dataset,
    schema: &ConstraintSchema,
    params: Option<&SmellParams>,
) -> Result<Labeled, ClassifyError> {
    let mut issues = detect_all(dataset, schema)?;
    label_issues(&mut issues)?;
    let params = params.copied().or(schema.smell_params).unwrap_or_default();
    let smells = detect_smells(dataset, schema, &params, &issues);
    Ok(Labeled { issues, smells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_legal_combination_aligns_to_a_permitted_pair() {
        for scope in Scope::ALL {
            for attribute in Attribute::INTEGRITY {
                let kinds: &[Option<ViolatedKind>] = if attribute == Attribute::Invalid {
                    &[Some(ViolatedKind::Pattern), Some(ViolatedKind::Type), Some(ViolatedKind::Range)]
                } else {
                    &[None]
                };
                for &kind in kinds {
                    let result = align(attribute, scope, kind);
                    if Attribute::legal_at(scope).contains(&attribute) {
                        let outcome = result.unwrap();
                        assert!(is_permitted(attribute, outcome), "{attribute} {scope}");
                    } else {
                        assert!(result.is_err(), "{attribute} at {scope} should be rejected");
                    }
                }
            }
        }
    }

    #[test]
    fn specific_alignments() {
        use OutcomeLabel::*;
        assert_eq!(align(Attribute::Invalid, Scope::Cell, Some(ViolatedKind::Type)), Ok(PatternViolation));
        assert_eq!(align(Attribute::Invalid, Scope::Cell, Some(ViolatedKind::Range)), Ok(RangeViolation));
        assert_eq!(align(Attribute::Missing, Scope::Cell, None), Ok(RangeViolation));
        assert_eq!(align(Attribute::Missing, Scope::InterRow, None), Ok(RuleViolation));
        assert_eq!(align(Attribute::Conflict, Scope::InterColumn, None), Ok(RuleViolation));
        assert_eq!(align(Attribute::Missing, Scope::InterTable, None), Ok(KnowledgeViolation));
        assert_eq!(align(Attribute::Invalid, Scope::Cell, None), Err(ContractError::MissingViolatedKind));
        assert!(align(Attribute::Believability, Scope::Cell, None).is_err());
    }

    #[test]
    fn permitted_set_has_exactly_nine_pairs() {
        let mut count = 0;
        for attribute in Attribute::ALL {
            for outcome in OutcomeLabel::ALL {
                if !attribute.is_smell() && is_permitted(attribute, outcome) {
                    count += 1;
                }
            }
        }
        assert_eq!(count + 1, PERMITTED_PAIRS.len());
        assert!(is_permitted(Attribute::Encoding, OutcomeLabel::NoneSmell));
        assert!(!is_permitted(Attribute::Encoding, OutcomeLabel::RuleViolation));
        assert!(!is_permitted(Attribute::Duplicate, OutcomeLabel::KnowledgeViolation));
    }
}
