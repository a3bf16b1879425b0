use crate::diagnostic::{Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    pub len: usize,
}

// longest first so `->` wins over `-`
const SYMBOLS: &[&str] =
    &["->", "==", "!=", "<=", ">=", "{", "}", "(", ")", ";", ",", ".", ":", "=", "<", ">"];

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `src` into tokens. Lexical problems become diagnostics and the
/// offending characters are skipped; the token list always ends with `Eof`.
pub(crate) fn lex(src: &str, file: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            toks.push(Token { tok: Tok::Ident(text), line, col: start_col, len: i - start });
            continue;
        }
        let negative = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
        if c.is_ascii_digit() || negative {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match text.parse::<i64>() {
                Ok(n) => Tok::Int(n),
                Err(_) => {
                    diags.push(Diagnostic::error(
                        "INVALID_NUMBER",
                        SourceSpan::new(file, line, start_col, i - start),
                        format!("integer literal `{text}` out of range"),
                    ));
                    Tok::Int(0)
                }
            };
            toks.push(Token { tok, line, col: start_col, len: i - start });
            continue;
        }
        if c == '"' {
            let start = i;
            let start_line = line;
            i += 1;
            col += 1;
            let mut value = String::new();
            let mut closed = false;
            while i < chars.len() {
                let ch = chars[i];
                if ch == '"' {
                    i += 1;
                    col += 1;
                    closed = true;
                    break;
                }
                if ch == '\n' {
                    break;
                }
                if ch == '\\' {
                    let esc = chars.get(i + 1).copied();
                    match esc {
                        Some('n') => value.push('\n'),
                        Some('t') => value.push('\t'),
                        Some('"') => value.push('"'),
                        Some('\\') => value.push('\\'),
                        other => {
                            diags.push(Diagnostic::error(
                                "INVALID_ESCAPE",
                                SourceSpan::new(file, line, col, 2),
                                format!("unknown escape `\\{}`", other.unwrap_or(' ')),
                            ));
                        }
                    }
                    i += if esc.is_some() { 2 } else { 1 };
                    col += 2;
                    continue;
                }
                value.push(ch);
                i += 1;
                col += 1;
            }
            if !closed {
                diags.push(Diagnostic::error(
                    "UNTERMINATED_STRING",
                    SourceSpan::new(file, start_line, start_col, i - start),
                    "string literal is not closed on this line",
                ));
            }
            toks.push(Token { tok: Tok::Str(value), line: start_line, col: start_col, len: i - start });
            continue;
        }
        if let Some(sym) =
            SYMBOLS.iter().find(|s| s.chars().enumerate().all(|(k, sc)| chars.get(i + k) == Some(&sc)))
        {
            let n = sym.chars().count();
            toks.push(Token { tok: Tok::Sym(sym), line, col: start_col, len: n });
            i += n;
            col += n;
            continue;
        }
        diags.push(Diagnostic::error(
            "UNEXPECTED_CHAR",
            SourceSpan::new(file, line, start_col, 1),
            format!("unexpected character {c:?}"),
        ));
        i += 1;
        col += 1;
    }
    toks.push(Token { tok: Tok::Eof, line, col, len: 0 });
    (toks, diags)
}
