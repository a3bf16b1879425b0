//! Classification of assertions by their person referents, and reduction of
//! compound PII into atomic parts.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::assertion::{Assertion, Role, Term, PLACEHOLDER};
use super::registry::{PersonId, Registry, Resolution};
use super::sensitivity::SensitivityLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    NotPii,
    Apii,
    Cpii { arity: usize },
}

impl Classification {
    pub fn from_referents(n: usize) -> Self {
        match n {
            0 => Classification::NotPii,
            1 => Classification::Apii,
            arity => Classification::Cpii { arity },
        }
    }

    pub fn is_pii(self) -> bool {
        self != Classification::NotPii
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::NotPii => f.write_str("NotPII"),
            Classification::Apii => f.write_str("APII"),
            Classification::Cpii { arity } => write!(f, "CPII({arity})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiiRecord {
    pub assertion: String,
    pub referents: BTreeSet<PersonId>,
    pub classification: Classification,
    pub trivial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityLevel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiiWarning {
    pub code: String,
    pub assertion: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classified {
    pub record: PiiRecord,
    pub warnings: Vec<PiiWarning>,
}

fn sphere_of<'a>(assertion: &'a Assertion, registry: &'a Registry) -> Option<&'a str> {
    assertion.sphere.as_deref().or(registry.default_sphere.as_deref())
}

/// Person each argument resolves to, `None` for everything else.
fn argument_persons(
    assertion: &Assertion,
    registry: &Registry,
    warnings: &mut Vec<PiiWarning>,
) -> Vec<Option<PersonId>> {
    let sphere = sphere_of(assertion, registry);
    assertion
        .arguments
        .iter()
        .map(|t| {
            let Term::Name(name) = t else {
                return None;
            };
            let Some(sphere) = sphere else {
                warnings.push(PiiWarning {
                    code: "UNRESOLVED_NAME".into(),
                    assertion: assertion.id.clone(),
                    message: format!("no identification sphere for `{name}`"),
                });
                return None;
            };
            match registry.resolve_name(name, sphere) {
                Resolution::Person(p) => Some(p),
                Resolution::Entity(_) => None,
                Resolution::Ambiguous(c) => {
                    warnings.push(PiiWarning {
                        code: "AMBIGUOUS_NAME".into(),
                        assertion: assertion.id.clone(),
                        message: format!(
                            "`{name}` matches {} in sphere `{sphere}`",
                            c.into_iter().collect::<Vec<_>>().join(", ")
                        ),
                    });
                    None
                }
                Resolution::Unresolved => {
                    warnings.push(PiiWarning {
                        code: "UNRESOLVED_NAME".into(),
                        assertion: assertion.id.clone(),
                        message: format!("`{name}` identifies nobody in sphere `{sphere}`"),
                    });
                    None
                }
            }
        })
        .collect()
}

/// Classifies by the number of distinct persons among the arguments. The
/// truth value of the assertion plays no part.
pub fn classify(assertion: &Assertion, registry: &Registry) -> Classified {
    let mut warnings = Vec::new();
    let referents: BTreeSet<PersonId> =
        argument_persons(assertion, registry, &mut warnings).into_iter().flatten().collect();
    Classified {
        record: PiiRecord {
            assertion: assertion.id.clone(),
            classification: Classification::from_referents(referents.len()),
            referents,
            trivial: false,
            sensitivity: None,
        },
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReduceError {
    #[error("assertion `{0}` is {1}, only CPII can be reduced")]
    NotCompound(String, Classification),
    #[error("record belongs to assertion `{0}`, not `{1}`")]
    Mismatch(String, String),
}

/// One atomic part of a reduced CPII.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedPart {
    pub person: PersonId,
    pub role: Role,
    /// Monadic reading, e.g. `loves(John)` or `being-loved(Mary)`.
    pub projection: String,
    pub assertion: Assertion,
    pub record: PiiRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reduction {
    pub relationship: String,
    pub parts: Vec<ReducedPart>,
}

const IRREGULAR: &[(&str, &str)] = &[
    ("give", "given"),
    ("take", "taken"),
    ("see", "seen"),
    ("know", "known"),
    ("write", "written"),
    ("hold", "held"),
    ("tell", "told"),
];

/// Crude passive participle used for object-side projections.
fn participle(pred: &str) -> String {
    if let Some((_, p)) = IRREGULAR.iter().find(|(v, _)| pred == *v || pred.strip_suffix('s') == Some(*v)) {
        return (*p).to_owned();
    }
    let stem = if pred.len() > 2 && pred.ends_with('s') && !pred.ends_with("ss") {
        &pred[..pred.len() - 1]
    } else {
        pred
    };
    if stem.ends_with('e') {
        format!("{stem}d")
    } else {
        format!("{stem}ed")
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Replaces whole-word occurrences of `name` with the placeholder, capitalised
/// at the start of the text.
fn anonymise(text: &str, name: &str) -> String {
    if name.is_empty() {
        return text.to_owned();
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    let mut at_start = true;
    while let Some(pos) = rest.find(name) {
        let before_ok = rest[..pos].chars().next_back().is_none_or(|c| !is_word_char(c))
            && (pos > 0 || out.chars().next_back().is_none_or(|c| !is_word_char(c)));
        let after = &rest[pos + name.len()..];
        let after_ok = after.chars().next().is_none_or(|c| !is_word_char(c));
        out.push_str(&rest[..pos]);
        if before_ok && after_ok {
            let start = at_start && out.trim().is_empty();
            out.push_str(if start { "Someone" } else { PLACEHOLDER });
        } else {
            out.push_str(name);
        }
        at_start = false;
        rest = after;
    }
    out.push_str(rest);
    out
}

/// Splits a CPII of arity n into n APII parts plus the relationship name.
/// Parts are ordered by each referent's first argument position.
pub fn reduce(
    record: &PiiRecord,
    assertion: &Assertion,
    registry: &Registry,
) -> Result<Reduction, ReduceError> {
    if record.assertion != assertion.id {
        return Err(ReduceError::Mismatch(record.assertion.clone(), assertion.id.clone()));
    }
    if !matches!(record.classification, Classification::Cpii { .. }) {
        return Err(ReduceError::NotCompound(assertion.id.clone(), record.classification));
    }
    let persons = argument_persons(assertion, registry, &mut Vec::new());
    let mut order: Vec<(PersonId, usize)> = Vec::new();
    for (pos, p) in persons.iter().enumerate() {
        if let Some(p) = p {
            if !order.iter().any(|(q, _)| q == p) {
                order.push((p.clone(), pos));
            }
        }
    }

    let mut parts = Vec::with_capacity(order.len());
    for (k, (person, first)) in order.iter().enumerate() {
        let role = Role::for_position(*first);
        let mut text = assertion.text.clone();
        let arguments: Vec<Term> = assertion
            .arguments
            .iter()
            .zip(&persons)
            .enumerate()
            .map(|(pos, (t, p))| match p {
                Some(q) if q != person => {
                    if let Term::Name(n) = t {
                        text = anonymise(&text, n);
                    }
                    Term::Someone(Role::for_position(pos))
                }
                _ => t.clone(),
            })
            .collect();
        let surface = assertion.arguments[*first].to_string();
        let projection = match role {
            Role::Subject => format!("{}({surface})", assertion.predicate),
            _ => format!("being-{}({surface})", participle(&assertion.predicate)),
        };
        let part = Assertion {
            id: format!("{}#{}", assertion.id, k + 1),
            text,
            predicate: assertion.predicate.clone(),
            arguments,
            truth: assertion.truth,
            sphere: assertion.sphere.clone(),
        };
        let record = classify(&part, registry).record;
        parts.push(ReducedPart { person: person.clone(), role, projection, assertion: part, record });
    }
    Ok(Reduction { relationship: assertion.predicate.clone(), parts })
}
