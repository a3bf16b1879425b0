//! Policy (`.fmp`) syntax.
//!
//! ```text
//! policy <id> deny <verb> <thing|any> [by <identity>] [at <location>]
//!        [during <time>] [while <activity>] on <subject>;
//! policy <id> cutoff [<thing>, ...] on <subject>;
//! policy <id> self_release on <subject>;
//! policy <id> solitude on <subject>;
//! ```
//!
//! Verbs are lower-case stage names or `any`. `cutoff` without a type list
//! guards the `identifier` thing type.

use std::fmt::Write as _;

use crate::diagnostic::Diagnostic;
use crate::ids::ThingTypeId;
use crate::model::Stage;
use crate::policy::{Action, ContextConstraint, Policy, PolicyKind};

use super::cursor::Cursor;
use super::lexer::{is_ident, Tok};

pub fn parse_policy(text: &str) -> Result<Policy, Vec<Diagnostic>> {
    let mut ps = parse_policies(text)?;
    if ps.len() == 1 {
        return Ok(ps.remove(0));
    }
    let mut cur = Cursor::new("", "<input>");
    let span = cur.here();
    cur.error("UNEXPECTED_TOKEN", span, format!("expected exactly one policy, found {}", ps.len()));
    Err(cur.finish())
}

pub fn parse_policies(text: &str) -> Result<Vec<Policy>, Vec<Diagnostic>> {
    parse_policies_named(text, "<input>")
}

pub fn parse_policies_named(text: &str, file: &str) -> Result<Vec<Policy>, Vec<Diagnostic>> {
    let mut cur = Cursor::new(text, file);
    let mut out: Vec<Policy> = Vec::new();
    while !cur.at_eof() {
        let t = cur.peek().clone();
        match &t.tok {
            Tok::Ident(k) if k == "policy" => {
                if let Some((p, span)) = policy(&mut cur) {
                    if out.iter().any(|q| q.id == p.id) {
                        cur.error("DUPLICATE_ID", span, format!("policy `{}` declared twice", p.id));
                    } else {
                        out.push(p);
                    }
                }
            }
            Tok::Ident(k) => {
                let span = cur.span_of(&t);
                cur.error("UNKNOWN_KEYWORD", span, format!("unknown keyword `{k}`; expected policy"));
                cur.bump();
                cur.recover();
            }
            _ => {
                cur.unexpected("`policy`");
                cur.bump();
                cur.recover();
            }
        }
    }
    if cur.has_errors() {
        Err(cur.finish())
    } else {
        Ok(out)
    }
}

fn value(cur: &mut Cursor, what: &str) -> Option<String> {
    cur.expect_name(what).map(|(v, _)| v)
}

fn policy(cur: &mut Cursor) -> Option<(Policy, crate::diagnostic::SourceSpan)> {
    cur.bump();
    let Some((id, id_span)) = cur.expect_name("a policy id") else {
        cur.recover();
        return None;
    };
    let Some((kw, kw_span)) = cur.expect_ident("deny, cutoff, self_release or solitude") else {
        cur.recover();
        return None;
    };
    let kind = match kw.as_str() {
        "deny" => match deny(cur) {
            Some(k) => k,
            None => {
                cur.recover();
                return None;
            }
        },
        "cutoff" => {
            let mut types = Vec::new();
            while let Tok::Ident(t) = &cur.peek().tok {
                if t == "on" {
                    break;
                }
                types.push(ThingTypeId::from(t.as_str()));
                cur.bump();
                if !cur.eat_sym(",") {
                    break;
                }
            }
            if types.is_empty() {
                types.push(ThingTypeId::from("identifier"));
            }
            PolicyKind::CutOffSources { identifier_types: types }
        }
        "self_release" => PolicyKind::SelfControlledRelease,
        "solitude" => PolicyKind::Solitude,
        other => {
            cur.error(
                "UNKNOWN_KEYWORD",
                kw_span,
                format!("unknown policy kind `{other}`; expected deny, cutoff, self_release or solitude"),
            );
            cur.recover();
            return None;
        }
    };
    let subject = subject(cur)?;
    if !cur.expect_sym(";") {
        cur.recover();
        return None;
    }
    Some((Policy { id, subject, kind }, id_span))
}

fn subject(cur: &mut Cursor) -> Option<String> {
    if cur.eat_kw("on") {
        if let Tok::Ident(s) | Tok::Str(s) = &cur.peek().tok {
            let s = s.clone();
            cur.bump();
            return Some(s);
        }
    }
    let span = cur.here();
    cur.error("MISSING_SUBJECT", span, "policy needs `on <subject>`");
    cur.recover();
    None
}

fn deny(cur: &mut Cursor) -> Option<PolicyKind> {
    let (verb, verb_span) = cur.expect_ident("an action verb")?;
    let stage = if verb == "any" {
        None
    } else {
        match Stage::ALL.into_iter().find(|s| s.as_str().to_lowercase() == verb) {
            Some(s) => Some(s),
            None => {
                cur.error(
                    "UNKNOWN_KEYWORD",
                    verb_span,
                    format!("unknown action `{verb}`; expected a lower-case stage name or any"),
                );
                return None;
            }
        }
    };
    let (thing, _) = cur.expect_ident("a thing type or any")?;
    let mut c = ContextConstraint {
        action: Action { stage, thing: (thing != "any").then(|| ThingTypeId::from(thing.as_str())) },
        ..Default::default()
    };
    let start = cur.here();
    loop {
        let slot = if cur.eat_kw("by") {
            &mut c.identity
        } else if cur.eat_kw("at") {
            &mut c.location
        } else if cur.eat_kw("during") {
            &mut c.time
        } else if cur.eat_kw("while") {
            &mut c.activity
        } else {
            break;
        };
        *slot = Some(value(cur, "a selector value")?);
    }
    if c.selector_count() == 0 && stage.is_none() && c.action.thing.is_none() {
        cur.error("NO_SELECTOR", start, "a deny policy needs an action or at least one selector");
    }
    Some(PolicyKind::ContextProhibition(c))
}

fn fmt_value(s: &str) -> String {
    if is_ident(s) {
        s.to_owned()
    } else {
        format!("{s:?}")
    }
}

pub fn format_policy(p: &Policy) -> String {
    let mut out = format!("policy {} ", fmt_value(&p.id));
    match &p.kind {
        PolicyKind::ContextProhibition(c) => {
            let _ = write!(out, "deny {}", c.action);
            for (word, v) in
                [("by", &c.identity), ("at", &c.location), ("during", &c.time), ("while", &c.activity)]
            {
                if let Some(v) = v {
                    let _ = write!(out, " {word} {}", fmt_value(v));
                }
            }
        }
        PolicyKind::CutOffSources { identifier_types } => {
            out.push_str("cutoff ");
            let types: Vec<&str> = identifier_types.iter().map(|t| t.as_str()).collect();
            out.push_str(&types.join(", "));
        }
        PolicyKind::SelfControlledRelease => out.push_str("self_release"),
        PolicyKind::Solitude => out.push_str("solitude"),
    }
    let _ = write!(out, " on {};", fmt_value(&p.subject));
    out
}
