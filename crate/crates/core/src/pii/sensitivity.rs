//! Table-driven sensitivity levels. The shipped default table is made-up
//! configuration; only the lookup rules are fixed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::assertion::Assertion;
use super::classify::{PiiRecord, PiiWarning};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensitivityLevel {
    None,
    Low,
    Moderate,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handling {
    Collect,
    Process,
    Disclose,
    Store,
    Transfer,
}

impl Handling {
    pub const ALL: [Handling; 5] =
        [Handling::Collect, Handling::Process, Handling::Disclose, Handling::Store, Handling::Transfer];

    pub fn as_str(self) -> &'static str {
        match self {
            Handling::Collect => "collect",
            Handling::Process => "process",
            Handling::Disclose => "disclose",
            Handling::Store => "store",
            Handling::Transfer => "transfer",
        }
    }
}

impl fmt::Display for Handling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown handling `{0}`")]
pub struct UnknownHandling(pub String);

impl FromStr for Handling {
    type Err = UnknownHandling;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Handling::ALL.into_iter().find(|h| h.as_str() == s).ok_or_else(|| UnknownHandling(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SensitivityConfigError {
    #[error("category `{0}` has no level for `{1}`")]
    Incomplete(String, Handling),
    #[error("predicate `{0}` maps to undeclared category `{1}`")]
    UndeclaredCategory(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitivityPolicy {
    /// Predicate name to category.
    pub categories: BTreeMap<String, String>,
    pub table: BTreeMap<String, BTreeMap<Handling, SensitivityLevel>>,
    pub default_level: SensitivityLevel,
}

impl SensitivityPolicy {
    /// Every declared category must cover every handling.
    pub fn check(&self) -> Result<(), SensitivityConfigError> {
        for (cat, row) in &self.table {
            if let Some(h) = Handling::ALL.into_iter().find(|h| !row.contains_key(h)) {
                return Err(SensitivityConfigError::Incomplete(cat.clone(), h));
            }
        }
        for (pred, cat) in &self.categories {
            if !self.table.contains_key(cat) {
                return Err(SensitivityConfigError::UndeclaredCategory(pred.clone(), cat.clone()));
            }
        }
        Ok(())
    }
}

impl Default for SensitivityPolicy {
    fn default() -> Self {
        use Handling::*;
        use SensitivityLevel::*;
        let row = |levels: [SensitivityLevel; 5]| -> BTreeMap<Handling, SensitivityLevel> {
            [Collect, Process, Disclose, Store, Transfer].into_iter().zip(levels).collect()
        };
        let table = [
            ("medical", row([Moderate, Moderate, High, Moderate, High])),
            ("financial", row([Moderate, Low, High, Moderate, High])),
            ("location", row([Low, Low, Moderate, Low, Moderate])),
            ("relationship", row([Low, Low, Moderate, Low, Moderate])),
            ("character", row([Low, Low, Moderate, Low, Low])),
            ("general", row([None, None, Low, None, Low])),
        ]
        .into_iter()
        .map(|(c, r)| (c.to_owned(), r))
        .collect();
        let categories = [
            ("diagnosis", "medical"),
            ("medical_record", "medical"),
            ("has_disease", "medical"),
            ("prescribed", "medical"),
            ("salary", "financial"),
            ("owes", "financial"),
            ("lives_at", "location"),
            ("visited", "location"),
            ("love", "relationship"),
            ("loves", "relationship"),
            ("married", "relationship"),
            ("honest", "character"),
            ("dishonest", "character"),
            ("give", "general"),
        ]
        .into_iter()
        .map(|(p, c)| (p.to_owned(), c.to_owned()))
        .collect();
        Self { categories, table, default_level: Low }
    }
}

/// Looks up the level for a record. Trivial records are always `none`; an
/// unmapped predicate or category yields the default level and a warning.
pub fn sensitivity(
    record: &PiiRecord,
    assertion: &Assertion,
    handling: Handling,
    policy: &SensitivityPolicy,
) -> (SensitivityLevel, Option<PiiWarning>) {
    if record.trivial {
        return (SensitivityLevel::None, None);
    }
    let level = policy
        .categories
        .get(&assertion.predicate)
        .and_then(|c| policy.table.get(c))
        .and_then(|row| row.get(&handling));
    match level {
        Some(l) => (*l, None),
        None => (
            policy.default_level,
            Some(PiiWarning {
                code: "UNKNOWN_CATEGORY".into(),
                assertion: assertion.id.clone(),
                message: format!(
                    "no sensitivity category for predicate `{}`, using default",
                    assertion.predicate
                ),
            }),
        ),
    }
}
