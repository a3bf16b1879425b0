//! Identifier registry and the PII calculus built on it.

mod assertion;
mod classify;
mod ledger;
mod registry;
mod sensitivity;
mod triviality;

pub use assertion::{term, Assertion, Role, Term, Truth, PLACEHOLDER};
pub use classify::{
    classify, reduce, Classification, Classified, PiiRecord, PiiWarning, ReduceError, ReducedPart, Reduction,
};
pub use ledger::{proprietors, Holder, LedgerError, Ownership, ProprietorshipLedger};
pub use registry::{
    Descriptors, Entity, EntityId, Identification, Identifier, Person, PersonId, Registry, RegistryError,
    Resolution,
};
pub use sensitivity::{
    sensitivity, Handling, SensitivityConfigError, SensitivityLevel, SensitivityPolicy, UnknownHandling,
};
pub use triviality::{is_trivial, TrivialityRules};

/// Classifies, then fills in triviality and (optionally) sensitivity.
pub fn assess(
    assertion: &Assertion,
    registry: &Registry,
    rules: &TrivialityRules,
    handling: Option<(Handling, &SensitivityPolicy)>,
) -> Classified {
    let mut c = classify(assertion, registry);
    c.record.trivial = c.record.classification.is_pii() && is_trivial(assertion, rules);
    if let Some((h, policy)) = handling.filter(|_| c.record.classification.is_pii()) {
        let (level, warning) = sensitivity(&c.record, assertion, h, policy);
        c.record.sensitivity = Some(level);
        c.warnings.extend(warning);
    }
    c
}
