use std::fmt;

use serde::{Deserialize, Serialize};

/// Position of a diagnostic in a source file. Line and column are 1-based and
/// counted in characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(file: impl Into<String>, line: usize, column: usize, length: usize) -> Self {
        Self { file: file.into(), line: line.max(1), column: column.max(1), length }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub span: SourceSpan,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &str, span: SourceSpan, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, code: code.to_owned(), span, message: message.into() }
    }

    pub fn warning(code: &str, span: SourceSpan, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, code: code.to_owned(), span, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {}[{}]: {}", self.span, sev, self.code, self.message)
    }
}

/// Sorts diagnostics by position so reports read top to bottom.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| (a.span.line, a.span.column, &a.code).cmp(&(b.span.line, b.span.column, &b.code)));
}
