//! Token cursor shared by every grammar in this module.

use crate::diagnostic::{sort_diagnostics, Diagnostic, SourceSpan};
use crate::guard::{CmpOp, GuardExpr};
use crate::model::{Location, Model, Stage};

use super::lexer::{lex, Tok, Token};

pub(crate) struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    pub file: String,
    pub diags: Vec<Diagnostic>,
}

/// `<sphere>.<thing>.<Stage>` as written, with spans for each part.
#[derive(Debug, Clone)]
pub(crate) struct RawRef {
    pub sphere: String,
    pub thing: String,
    pub stage: Option<Stage>,
    pub span: SourceSpan,
}

impl Cursor {
    pub fn new(src: &str, file: &str) -> Self {
        let (toks, diags) = lex(src, file);
        Self { toks, pos: 0, file: file.to_owned(), diags }
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    pub fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    pub fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    /// Token index, for detecting lack of progress.
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub fn span_of(&self, t: &Token) -> SourceSpan {
        SourceSpan::new(&self.file, t.line, t.col, t.len)
    }

    pub fn here(&self) -> SourceSpan {
        let t = self.peek().clone();
        self.span_of(&t)
    }

    /// Span from the start of `from` to the end of the previous token.
    pub fn span_from(&self, from: &Token) -> SourceSpan {
        let prev = &self.toks[self.pos.saturating_sub(1)];
        let len = if prev.line == from.line && prev.col + prev.len >= from.col {
            prev.col + prev.len - from.col
        } else {
            from.len
        };
        SourceSpan::new(&self.file, from.line, from.col, len)
    }

    pub fn at_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    pub fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == kw)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error(&mut self, code: &str, span: SourceSpan, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    pub fn unexpected(&mut self, expected: &str) {
        let t = self.peek().clone();
        let span = self.span_of(&t);
        self.error("UNEXPECTED_TOKEN", span, format!("expected {expected}, found {}", t.tok.describe()));
    }

    pub fn expect_sym(&mut self, s: &str) -> bool {
        if self.eat_sym(s) {
            true
        } else {
            self.unexpected(&format!("`{s}`"));
            false
        }
    }

    pub fn expect_ident(&mut self, what: &str) -> Option<(String, SourceSpan)> {
        let t = self.peek().clone();
        if let Tok::Ident(name) = &t.tok {
            self.bump();
            Some((name.clone(), self.span_of(&t)))
        } else {
            self.unexpected(what);
            None
        }
    }

    /// Identifier or string literal, used for ids that may not be identifiers.
    pub fn expect_name(&mut self, what: &str) -> Option<(String, SourceSpan)> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(s) | Tok::Str(s) => {
                self.bump();
                Some((s.clone(), self.span_of(&t)))
            }
            _ => {
                self.unexpected(what);
                None
            }
        }
    }

    pub fn expect_str(&mut self, what: &str) -> Option<String> {
        let t = self.peek().clone();
        if let Tok::Str(s) = &t.tok {
            self.bump();
            Some(s.clone())
        } else {
            self.unexpected(what);
            None
        }
    }

    /// Skips to just past the next `;` at the current nesting depth, or stops
    /// in front of a closing `}` that belongs to an enclosing block.
    pub fn recover(&mut self) {
        let mut depth = 0usize;
        loop {
            match &self.peek().tok {
                Tok::Eof => return,
                Tok::Sym(";") if depth == 0 => {
                    self.bump();
                    return;
                }
                Tok::Sym("{") => depth += 1,
                Tok::Sym("}") => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                    if depth == 0 {
                        self.bump();
                        return;
                    }
                }
                _ => {}
            }
            self.bump();
        }
    }

    pub fn finish(mut self) -> Vec<Diagnostic> {
        sort_diagnostics(&mut self.diags);
        self.diags
    }

    pub fn has_errors(&self) -> bool {
        self.diags.iter().any(Diagnostic::is_error)
    }

    pub fn parse_stage(&mut self) -> Option<Stage> {
        let (name, span) = self.expect_ident("a stage name")?;
        match name.parse::<Stage>() {
            Ok(s) => Some(s),
            Err(_) => {
                let hint = Stage::ALL.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
                self.error("UNKNOWN_STAGE", span, format!("unknown stage `{name}`; expected one of {hint}"));
                None
            }
        }
    }

    /// Parses `<sphere>.<thing>.<Stage>`.
    pub fn parse_ref(&mut self) -> Option<RawRef> {
        let start = self.peek().clone();
        let (sphere, _) = self.expect_ident("a sphere name")?;
        if !self.expect_sym(".") {
            return None;
        }
        let (thing, _) = self.expect_ident("a thing type")?;
        if !self.expect_sym(".") {
            return None;
        }
        let stage_ok = matches!(self.peek().tok, Tok::Ident(_));
        let stage = self.parse_stage();
        if stage.is_none() && !stage_ok {
            return None;
        }
        Some(RawRef { sphere, thing, stage, span: self.span_from(&start) })
    }

    /// Resolves a reference against a model, reporting UNRESOLVED_REFERENCE.
    pub fn resolve_ref(&mut self, model: &Model, r: &RawRef) -> Option<Location> {
        let stage = r.stage?;
        let machine = model.machine_for(&r.sphere.as_str().into(), &r.thing.as_str().into());
        match machine {
            Some(m) if m.stages.contains(&stage) => Some(Location::new(m.id.clone(), stage)),
            Some(m) => {
                self.error(
                    "UNRESOLVED_REFERENCE",
                    r.span.clone(),
                    format!("machine `{}` has no {stage} stage", m.id),
                );
                None
            }
            None => {
                self.error(
                    "UNRESOLVED_REFERENCE",
                    r.span.clone(),
                    format!("no `{}` machine in sphere `{}`", r.thing, r.sphere),
                );
                None
            }
        }
    }

    pub fn parse_guard(&mut self) -> Option<GuardExpr> {
        self.guard_or()
    }

    fn guard_or(&mut self) -> Option<GuardExpr> {
        let mut lhs = self.guard_and()?;
        while self.eat_kw("or") {
            let rhs = self.guard_and()?;
            lhs = GuardExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Some(lhs)
    }

    fn guard_and(&mut self) -> Option<GuardExpr> {
        let mut lhs = self.guard_cmp()?;
        while self.eat_kw("and") {
            let rhs = self.guard_cmp()?;
            lhs = GuardExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Some(lhs)
    }

    fn guard_cmp(&mut self) -> Option<GuardExpr> {
        let lhs = self.guard_operand()?;
        let op = match &self.peek().tok {
            Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return Some(lhs),
        };
        self.bump();
        let rhs = self.guard_operand()?;
        Some(GuardExpr::compare(lhs, op, rhs))
    }

    fn guard_operand(&mut self) -> Option<GuardExpr> {
        if self.eat_kw("not") {
            return Some(GuardExpr::Not(Box::new(self.guard_operand()?)));
        }
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(n) => {
                self.bump();
                Some(GuardExpr::Int(*n))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Some(GuardExpr::Bool(s == "true"))
            }
            Tok::Ident(s) if s == "and" || s == "or" => {
                self.unexpected("a guard operand");
                None
            }
            Tok::Ident(s) => {
                self.bump();
                Some(GuardExpr::Counter(s.clone()))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.guard_or()?;
                if !self.expect_sym(")") {
                    return None;
                }
                Some(e)
            }
            _ => {
                self.unexpected("a guard operand");
                None
            }
        }
    }
}
