//! The script language.
//!
//! ```text
//! observable Z { up: 1, down: -1 }
//! observable X { plus, minus }
//! let p = M[Z:up] * M[X:plus]
//! normalize p * M[Z:up]
//! prob(X:plus | Z:up)
//! ```
//!
//! [`parse`] turns source text into a span-annotated tree, [`render`] prints
//! it back canonically and [`analyze`] resolves names against a registry.

use std::fmt;

use thiserror::Error;

pub mod analyze;
pub mod ast;
pub mod lexer;
pub mod parser;
pub mod render;

pub use analyze::{analyze, analyze_with, Program, Query, QueryKind};
pub use ast::{Expr, ExprKind, Ident, LabelEntry, StateLit, Stmt, StmtKind};
pub use parser::parse;
pub use render::{render_expr, render_program, render_stmt};

/// Source location: 1-based line and column, length in characters, and the
/// character offset of the first character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub line: u32,
    pub column: u32,
    pub length: u32,
    pub offset: u32,
}

impl Span {
    /// Smallest span covering both.
    pub fn to(self, end: Span) -> Span {
        Span {
            length: (end.offset + end.length).saturating_sub(self.offset),
            ..self
        }
    }

    /// Empty span just past this one, on the same line.
    pub fn after(self) -> Span {
        Span {
            column: self.column + self.length,
            offset: self.offset + self.length,
            length: 0,
            ..self
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ErrorKind {
    #[error("{}", syntax_message(found, expected))]
    Syntax { found: String, expected: Vec<String> },
    #[error("invalid literal: {0}")]
    Literal(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("observable `{observable}` has no label `{label}`")]
    UnknownLabel { observable: String, label: String },
    #[error("{0}")]
    Declaration(String),
}

fn syntax_message(found: &str, expected: &[String]) -> String {
    match expected {
        [] => format!("unexpected {found}"),
        [one] => format!("expected {one}, found {found}"),
        _ => format!("expected one of {}, found {found}", expected.join(", ")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind}")]
pub struct DslError {
    pub kind: ErrorKind,
    pub span: Span,
}

impl DslError {
    pub fn new(kind: ErrorKind, span: Span) -> Self {
        DslError { kind, span }
    }

    pub fn is_syntax(&self) -> bool {
        matches!(self.kind, ErrorKind::Syntax { .. } | ErrorKind::Literal(_))
    }
}

pub type Result<T> = std::result::Result<T, DslError>;
