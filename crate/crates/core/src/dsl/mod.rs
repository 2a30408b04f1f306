//! The `.cid` model format.
//!
//! ```text
//! # one statement per declaration
//! variable p_rep : probability { prior jeffreys }
//! variable m     : probability = chain(m_rep, p_rep, m_norep)
//! study timi { on p_rep; successes 78; trials 118; }
//! option zero_cell = half;
//! option report = m;
//! ```
//!
//! [`parse`] never panics; every failure comes back as a list of
//! [`Diagnostic`]s that point into the input text.

mod ast;
mod check;
mod lexer;
mod parser;
mod serialize;

use std::fmt;

use serde::Serialize;

pub use ast::{
    Definition, Expr, ExprKind, Ident, Item, ModelSpec, OptionDecl, StudyDecl, VariableDecl,
};
pub use check::compile;
pub use serialize::serialize;

use crate::model::CompiledModel;

/// Location of a diagnostic or AST node. `offset` and `length` are byte
/// counts; `line` and `column` are 1-based, columns counted in characters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SourceSpan {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl Default for SourceSpan {
    fn default() -> Self {
        Self {
            offset: 0,
            line: 1,
            column: 1,
            length: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticKind {
    Lexical,
    Syntax,
    Semantic,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::Lexical => "lexical error",
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::Semantic => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub span: SourceSpan,
    pub message: String,
}

impl Diagnostic {
    pub fn new(kind: DiagnosticKind, span: SourceSpan, message: impl Into<String>) -> Self {
        Self {
            kind,
            span,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.span.line, self.span.column, self.kind, self.message
        )
    }
}

impl std::error::Error for Diagnostic {}

/// Maps byte offsets to line/column positions.
pub(crate) struct LineIndex<'a> {
    text: &'a str,
    starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        Self { text, starts }
    }

    pub(crate) fn span(&self, offset: usize, length: usize) -> SourceSpan {
        let offset = offset.min(self.text.len());
        let length = length.min(self.text.len() - offset);
        let line = self.starts.partition_point(|&s| s <= offset);
        let start = self.starts[line - 1];
        let column = self
            .text
            .get(start..offset)
            .map(|s| s.chars().count())
            .unwrap_or(offset - start)
            + 1;
        SourceSpan {
            offset,
            line,
            column,
            length,
        }
    }
}

/// Parses and checks `text`. Succeeds only if the result compiles.
pub fn parse(text: &str) -> Result<ModelSpec, Vec<Diagnostic>> {
    let lines = LineIndex::new(text);
    let (tokens, mut diags) = lexer::lex(text, &lines);
    let (spec, syntax) = parser::parse_tokens(&tokens, &lines);
    diags.extend(syntax);
    if diags.is_empty() {
        diags = check::check(&spec);
    }
    if diags.is_empty() {
        Ok(spec)
    } else {
        diags.sort_by_key(|d| d.span.offset);
        Err(diags)
    }
}

/// Like [`parse`], for raw bytes. Invalid UTF-8 is a lexical diagnostic.
pub fn parse_bytes(bytes: &[u8]) -> Result<ModelSpec, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => {
            let valid = e.valid_up_to();
            let text = std::str::from_utf8(&bytes[..valid]).expect("valid prefix");
            let lines = LineIndex::new(text);
            let mut span = lines.span(valid, 0);
            span.length = e.error_len().unwrap_or(bytes.len() - valid);
            Err(vec![Diagnostic::new(
                DiagnosticKind::Lexical,
                span,
                "input is not valid UTF-8",
            )])
        }
    }
}

/// Parses and compiles in one step.
pub fn load(text: &str) -> Result<CompiledModel, Vec<Diagnostic>> {
    compile(&parse(text)?)
}
