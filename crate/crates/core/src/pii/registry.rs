//! Persons, identifiers and named non-person entities, per sphere.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type PersonId = String;
pub type EntityId = String;
pub type Descriptors = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    pub id: PersonId,
    /// The model sphere that is this person.
    pub sphere: String,
}

/// A descriptor set that picks out `person` within `sphere`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identifier {
    pub person: PersonId,
    pub sphere: String,
    pub descriptors: Descriptors,
}

/// Something nameable that is not a natural person (an airport, a company).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub sphere: String,
    #[serde(default)]
    pub kind: String,
    pub descriptors: Descriptors,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Registry {
    #[serde(default)]
    pub spheres: Vec<String>,
    #[serde(default)]
    pub default_sphere: Option<String>,
    #[serde(default)]
    pub persons: Vec<Person>,
    #[serde(default)]
    pub identifiers: Vec<Identifier>,
    #[serde(default)]
    pub entities: Vec<Entity>,
    /// Named person sets, e.g. a colleagues group.
    #[serde(default)]
    pub groups: BTreeMap<String, BTreeSet<PersonId>>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("registry JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate person id `{0}`")]
    DuplicatePerson(String),
    #[error("identifier refers to unknown person `{0}`")]
    UnknownPerson(String),
    #[error("unknown sphere `{0}`")]
    UnknownSphere(String),
    #[error("persons `{0}` and `{1}` share an identical descriptor set in sphere `{2}`")]
    SharedIdentifier(String, String, String),
    #[error("group `{0}` lists unknown person `{1}`")]
    UnknownGroupMember(String, String),
}

/// Outcome of matching a descriptor query against the registry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", content = "persons", rename_all = "snake_case")]
pub enum Identification {
    Unique(PersonId),
    Ambiguous(BTreeSet<PersonId>),
    Unknown,
}

/// What a name term refers to in a sphere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    Person(PersonId),
    Entity(EntityId),
    Ambiguous(BTreeSet<String>),
    Unresolved,
}

fn subset(query: &Descriptors, of: &Descriptors) -> bool {
    query.iter().all(|(k, v)| of.get(k) == Some(v))
}

impl Registry {
    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let reg: Registry = serde_json::from_str(text)?;
        reg.check()?;
        Ok(reg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serializes")
    }

    /// Checks references and per-sphere identifier uniqueness.
    pub fn check(&self) -> Result<(), RegistryError> {
        let mut ids = BTreeSet::new();
        for p in &self.persons {
            if !ids.insert(p.id.as_str()) {
                return Err(RegistryError::DuplicatePerson(p.id.clone()));
            }
        }
        let known_sphere = |s: &str| self.spheres.iter().any(|x| x == s);
        if let Some(d) = &self.default_sphere {
            if !known_sphere(d) {
                return Err(RegistryError::UnknownSphere(d.clone()));
            }
        }
        for (i, a) in self.identifiers.iter().enumerate() {
            if !ids.contains(a.person.as_str()) {
                return Err(RegistryError::UnknownPerson(a.person.clone()));
            }
            if !known_sphere(&a.sphere) {
                return Err(RegistryError::UnknownSphere(a.sphere.clone()));
            }
            for b in &self.identifiers[..i] {
                if b.sphere == a.sphere && b.person != a.person && b.descriptors == a.descriptors {
                    return Err(RegistryError::SharedIdentifier(
                        b.person.clone(),
                        a.person.clone(),
                        a.sphere.clone(),
                    ));
                }
            }
        }
        for e in &self.entities {
            if !known_sphere(&e.sphere) {
                return Err(RegistryError::UnknownSphere(e.sphere.clone()));
            }
        }
        for (g, members) in &self.groups {
            if let Some(m) = members.iter().find(|m| !ids.contains(m.as_str())) {
                return Err(RegistryError::UnknownGroupMember(g.clone(), m.clone()));
            }
        }
        Ok(())
    }

    pub fn person(&self, id: &str) -> Option<&Person> {
        self.persons.iter().find(|p| p.id == id)
    }

    pub fn is_person(&self, id: &str) -> bool {
        self.person(id).is_some()
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn group(&self, name: &str) -> Option<&BTreeSet<PersonId>> {
        self.groups.get(name)
    }

    /// The person whose own sphere is `sphere`.
    pub fn person_for_sphere(&self, sphere: &str) -> Option<&Person> {
        self.persons.iter().find(|p| p.sphere == sphere)
    }

    /// Persons with a registered descriptor set in `sphere` that contains
    /// every descriptor of the query.
    pub fn identify(&self, query: &Descriptors, sphere: &str) -> Identification {
        let matches: BTreeSet<PersonId> = self
            .identifiers
            .iter()
            .filter(|i| i.sphere == sphere && subset(query, &i.descriptors))
            .map(|i| i.person.clone())
            .collect();
        match matches.len() {
            0 => Identification::Unknown,
            1 => Identification::Unique(matches.into_iter().next().expect("one match")),
            _ => Identification::Ambiguous(matches),
        }
    }

    /// Resolves a surface name (matched against the `name` descriptor).
    pub fn resolve_name(&self, name: &str, sphere: &str) -> Resolution {
        let mut query = Descriptors::new();
        query.insert("name".to_owned(), name.to_owned());
        let entities: BTreeSet<String> = self
            .entities
            .iter()
            .filter(|e| e.sphere == sphere && subset(&query, &e.descriptors))
            .map(|e| e.id.clone())
            .collect();
        match (self.identify(&query, sphere), entities.len()) {
            (Identification::Unique(p), 0) => Resolution::Person(p),
            (Identification::Unknown, 0) => Resolution::Unresolved,
            (Identification::Unknown, 1) => {
                Resolution::Entity(entities.into_iter().next().expect("one entity"))
            }
            (Identification::Unique(p), _) => {
                let mut all = entities;
                all.insert(p);
                Resolution::Ambiguous(all)
            }
            (Identification::Ambiguous(ps), _) => {
                let mut all = entities;
                all.extend(ps);
                Resolution::Ambiguous(all)
            }
            (Identification::Unknown, _) => Resolution::Ambiguous(entities),
        }
    }
}
