//! Assertion corpus syntax.
//!
//! ```text
//! context <sphere>;
//! [<id>:] <predicate>(<term>, ...) [truth=T|F|U] ["<gloss>"] [;]
//! ```
//!
//! Capitalised words and string literals are names, other words and numbers
//! are constants, and `someone` is the anonymous placeholder. `context` sets
//! the identification sphere for the assertions after it. Assertions without
//! an id get `a<n>`, numbered from 1 in file order.

use std::fmt::Write as _;

use crate::diagnostic::Diagnostic;
use crate::pii::{Assertion, Role, Term, Truth, PLACEHOLDER};

use super::cursor::Cursor;
use super::lexer::{is_ident, Tok};

pub fn parse_corpus(text: &str) -> Result<Vec<Assertion>, Vec<Diagnostic>> {
    parse_corpus_named(text, "<input>")
}

pub fn parse_corpus_named(text: &str, file: &str) -> Result<Vec<Assertion>, Vec<Diagnostic>> {
    let mut cur = Cursor::new(text, file);
    let mut out: Vec<Assertion> = Vec::new();
    let mut sphere: Option<String> = None;
    let mut n = 0usize;

    while !cur.at_eof() {
        if cur.at_kw("context") && !matches!(cur.peek_at(1).tok, Tok::Sym("(")) {
            cur.bump();
            match cur.expect_name("a sphere name") {
                Some((s, _)) => sphere = Some(s),
                None => {
                    cur.recover();
                    continue;
                }
            }
            cur.eat_sym(";");
            continue;
        }
        n += 1;
        let start = cur.here();
        let before = cur.position();
        match statement(&mut cur, n) {
            Some(mut a) => {
                a.sphere = sphere.clone();
                if out.iter().any(|b| b.id == a.id) {
                    cur.error("DUPLICATE_ID", start, format!("assertion `{}` declared twice", a.id));
                } else {
                    out.push(a);
                }
            }
            None => {
                cur.recover();
                if cur.position() == before {
                    cur.bump();
                }
            }
        }
    }
    if cur.has_errors() {
        Err(cur.finish())
    } else {
        Ok(out)
    }
}

fn statement(cur: &mut Cursor, n: usize) -> Option<Assertion> {
    let mut id = format!("a{n}");
    if matches!(cur.peek_at(1).tok, Tok::Sym(":")) {
        id = cur.expect_name("an assertion id")?.0;
        cur.bump();
    }
    let (predicate, _) = cur.expect_ident("a predicate")?;
    if !cur.expect_sym("(") {
        return None;
    }
    let mut arguments = Vec::new();
    while !cur.at_sym(")") {
        let t = cur.peek().clone();
        let term = match &t.tok {
            Tok::Str(s) => Term::Name(s.clone()),
            Tok::Ident(s) if s == PLACEHOLDER => Term::Someone(Role::for_position(arguments.len())),
            Tok::Ident(s) if s.starts_with(|c: char| c.is_ascii_uppercase()) => Term::Name(s.clone()),
            Tok::Ident(s) => Term::Constant(s.clone()),
            Tok::Int(i) => Term::Constant(i.to_string()),
            _ => {
                cur.unexpected("a term");
                return None;
            }
        };
        cur.bump();
        arguments.push(term);
        if !cur.eat_sym(",") {
            break;
        }
    }
    if !cur.expect_sym(")") {
        return None;
    }
    let mut a = Assertion::new(&id, &predicate, arguments);
    if cur.at_kw("truth") && matches!(cur.peek_at(1).tok, Tok::Sym("=")) {
        cur.bump();
        cur.bump();
        let (v, span) = cur.expect_ident("T, F or U")?;
        a.truth = match v.as_str() {
            "T" | "true" => Truth::True,
            "F" | "false" => Truth::False,
            "U" | "unknown" => Truth::Unknown,
            _ => {
                cur.error("UNEXPECTED_TOKEN", span, format!("expected T, F or U, found `{v}`"));
                return None;
            }
        };
    }
    if let Tok::Str(s) = &cur.peek().tok {
        a.text = s.clone();
        cur.bump();
    }
    cur.eat_sym(";");
    Some(a)
}

fn fmt_name(s: &str) -> String {
    if is_ident(s) {
        s.to_owned()
    } else {
        format!("{s:?}")
    }
}

/// Writes assertions back in corpus syntax, one per line.
pub fn format_corpus(assertions: &[Assertion]) -> String {
    let mut out = String::new();
    let mut sphere: Option<&str> = None;
    for a in assertions {
        if let Some(s) = a.sphere.as_deref() {
            if sphere != Some(s) {
                let _ = writeln!(out, "context {};", fmt_name(s));
                sphere = Some(s);
            }
        }
        let _ = write!(out, "{}: {}", fmt_name(&a.id), a.structured());
        match a.truth {
            Truth::True => out.push_str(" truth=T"),
            Truth::False => out.push_str(" truth=F"),
            Truth::Unknown => {}
        }
        if a.text != a.structured() {
            let _ = write!(out, " {:?}", a.text);
        }
        out.push('\n');
    }
    out
}
