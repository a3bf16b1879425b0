use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::assertion::Assertion;

/// Rule list for privacy-insignificant assertions. This is configuration, not
/// a decision procedure: the shipped predicates are a small seed list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrivialityRules {
    /// Predicates read as identity; all-identical arguments make it trivial.
    pub identity_predicates: BTreeSet<String>,
    /// Predicates true of every person (species membership, anatomy).
    pub analytic_predicates: BTreeSet<String>,
}

impl Default for TrivialityRules {
    fn default() -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            identity_predicates: set(&["is", "equals", "identical", "same_as"]),
            analytic_predicates: set(&["has_two_hands", "is_human", "human_being", "is_mortal"]),
        }
    }
}

pub fn is_trivial(assertion: &Assertion, rules: &TrivialityRules) -> bool {
    let reflexive = rules.identity_predicates.contains(&assertion.predicate)
        && assertion.arguments.len() >= 2
        && assertion.arguments.windows(2).all(|w| w[0] == w[1]);
    reflexive || rules.analytic_predicates.contains(&assertion.predicate)
}
