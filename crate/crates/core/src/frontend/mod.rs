//! Parsing, control-point labeling, def-use links and source rendering.

mod ast;
mod defuse;
mod lexer;
mod parser;
mod render;

pub use ast::*;
pub use defuse::{compute_def_use, DefUseLinks, LinkKind};
pub use parser::{parse, parse_with, ParseOptions};
pub(crate) use lexer::{tokenize, Tok};
pub use render::{emit_annotated, render, strip_annotations, MissingWidth};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("`{0}` may be read before it is assigned")]
    UseBeforeDef(String),
    #[error("malformed require_nsb: {0}")]
    MalformedRequire(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: u32,
    pub col: u32,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, line: u32, col: u32) -> Self {
        ParseError { kind, line, col }
    }
}
