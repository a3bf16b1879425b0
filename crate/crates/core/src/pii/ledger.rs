//! Who owns a piece of PII (its referents, fixed) and who merely holds it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classify::PiiRecord;
use super::registry::PersonId;

/// Anything that can possess PII: a person or a non-person entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Holder {
    Person(String),
    Entity(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ownership {
    pub proprietors: BTreeSet<PersonId>,
    pub possessors: BTreeSet<Holder>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("TRANSFER_FORBIDDEN: proprietors of `{0}` cannot change")]
    TransferForbidden(String),
    #[error("record `{0}` is not PII")]
    NotPii(String),
    #[error("record `{0}` is not in the ledger")]
    UnknownRecord(String),
}

impl LedgerError {
    pub fn code(&self) -> &'static str {
        match self {
            LedgerError::TransferForbidden(_) => "TRANSFER_FORBIDDEN",
            LedgerError::NotPii(_) => "NOT_PII",
            LedgerError::UnknownRecord(_) => "UNKNOWN_RECORD",
        }
    }
}

pub fn proprietors(record: &PiiRecord) -> BTreeSet<PersonId> {
    record.referents.clone()
}

/// Keyed by assertion id. Operations return a new ledger and leave the input
/// untouched.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProprietorshipLedger {
    entries: BTreeMap<String, Ownership>,
}

impl ProprietorshipLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, assertion: &str) -> Option<&Ownership> {
        self.entries.get(assertion)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Ownership)> {
        self.entries.iter()
    }

    /// Registers a record; proprietors come from its referents. Registering
    /// the same record again is a no-op, a different referent set is rejected.
    pub fn register(&self, record: &PiiRecord) -> Result<Self, LedgerError> {
        if record.referents.is_empty() {
            return Err(LedgerError::NotPii(record.assertion.clone()));
        }
        let mut next = self.clone();
        match next.entries.get(&record.assertion) {
            Some(o) if o.proprietors != record.referents => {
                Err(LedgerError::TransferForbidden(record.assertion.clone()))
            }
            Some(_) => Ok(next),
            None => {
                next.entries.insert(
                    record.assertion.clone(),
                    Ownership { proprietors: record.referents.clone(), possessors: BTreeSet::new() },
                );
                Ok(next)
            }
        }
    }

    pub fn record_possession(&self, record: &PiiRecord, holder: Holder) -> Result<Self, LedgerError> {
        let mut next = self.register(record)?;
        next.entries.get_mut(&record.assertion).expect("registered above").possessors.insert(holder);
        Ok(next)
    }

    pub fn release_possession(&self, assertion: &str, holder: &Holder) -> Result<Self, LedgerError> {
        let mut next = self.clone();
        let o = next
            .entries
            .get_mut(assertion)
            .ok_or_else(|| LedgerError::UnknownRecord(assertion.to_owned()))?;
        o.possessors.remove(holder);
        Ok(next)
    }

    /// Always rejected: proprietorship is not transferable.
    pub fn add_proprietor(&self, assertion: &str, _person: &str) -> Result<Self, LedgerError> {
        Err(LedgerError::TransferForbidden(assertion.to_owned()))
    }

    pub fn remove_proprietor(&self, assertion: &str, _person: &str) -> Result<Self, LedgerError> {
        Err(LedgerError::TransferForbidden(assertion.to_owned()))
    }

    pub fn transfer_proprietorship(
        &self,
        assertion: &str,
        _from: &str,
        _to: &str,
    ) -> Result<Self, LedgerError> {
        Err(LedgerError::TransferForbidden(assertion.to_owned()))
    }
}
