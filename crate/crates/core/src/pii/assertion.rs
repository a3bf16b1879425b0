use std::fmt;

use serde::{Deserialize, Serialize};

/// Argument position of a person in a predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Subject,
    Object,
    Argument(usize),
}

impl Role {
    pub fn for_position(pos: usize) -> Self {
        match pos {
            0 => Role::Subject,
            1 => Role::Object,
            n => Role::Argument(n + 1),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Subject => f.write_str("subject"),
            Role::Object => f.write_str("object"),
            Role::Argument(n) => write!(f, "argument{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    /// A name that may refer to a person.
    Name(String),
    /// A constant that never refers to a person (`pen`, `42`).
    Constant(String),
    /// Anonymous stand-in for a person removed by reduction.
    Someone(Role),
}

pub const PLACEHOLDER: &str = "someone";

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Name(n) => {
                let plain = n.chars().next().is_some_and(|c| c.is_ascii_uppercase())
                    && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                if plain {
                    f.write_str(n)
                } else {
                    write!(f, "{n:?}")
                }
            }
            Term::Constant(c) => f.write_str(c),
            Term::Someone(_) => f.write_str(PLACEHOLDER),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    True,
    False,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub id: String,
    pub text: String,
    pub predicate: String,
    pub arguments: Vec<Term>,
    #[serde(default)]
    pub truth: Truth,
    /// Identification context; the registry default applies when absent.
    #[serde(default)]
    pub sphere: Option<String>,
}

impl Assertion {
    pub fn new(id: &str, predicate: &str, arguments: Vec<Term>) -> Self {
        let mut a = Self {
            id: id.to_owned(),
            text: String::new(),
            predicate: predicate.to_owned(),
            arguments,
            truth: Truth::Unknown,
            sphere: None,
        };
        a.text = a.structured();
        a
    }

    pub fn with_text(mut self, text: &str) -> Self {
        self.text = text.to_owned();
        self
    }

    pub fn with_truth(mut self, truth: Truth) -> Self {
        self.truth = truth;
        self
    }

    /// `predicate(arg, ...)` form.
    pub fn structured(&self) -> String {
        let args: Vec<String> = self.arguments.iter().map(|t| t.to_string()).collect();
        format!("{}({})", self.predicate, args.join(", "))
    }
}

/// Shorthand for tests and fixtures: capitalised words are names.
pub fn term(s: &str) -> Term {
    if s.chars().next().is_some_and(|c| c.is_uppercase()) {
        Term::Name(s.to_owned())
    } else {
        Term::Constant(s.to_owned())
    }
}
