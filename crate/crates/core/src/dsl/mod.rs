//! Textual syntaxes: models (`.fm`), scenarios and control graphs (`.fms`),
//! policies (`.fmp`) and assertion corpora.
//!
//! Every parser reports problems as [`Diagnostic`]s carrying the source span
//! and keeps going after an error, so one pass shows all of them.

mod corpus;
mod cursor;
mod lexer;
mod model;
mod policy;
mod scenario;

use crate::diagnostic::Diagnostic;
use crate::guard::GuardExpr;

pub use corpus::{format_corpus, parse_corpus, parse_corpus_named};
pub use model::{format_model, parse_model, parse_model_named};
pub use policy::{format_policy, parse_policies, parse_policies_named, parse_policy};
pub use scenario::{parse_control_graph, parse_scenario, parse_scenario_named};

/// Parses a standalone guard expression such as `fails >= 3 and not locked`.
pub fn parse_guard(text: &str) -> Result<GuardExpr, Vec<Diagnostic>> {
    let mut cur = cursor::Cursor::new(text, "<guard>");
    let g = cur.parse_guard();
    if g.is_some() && !cur.at_eof() {
        cur.unexpected("end of guard");
    }
    match g {
        Some(g) if !cur.has_errors() => Ok(g),
        _ => Err(cur.finish()),
    }
}
