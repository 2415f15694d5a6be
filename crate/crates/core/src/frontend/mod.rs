//! MiniSol front end: lexer, parser, validation and pretty-printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod validate;

use std::fmt;

pub use ast::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    /// Names the rejected construct.
    Unsupported(String),
    Validation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub fn lexical(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            kind: ParseErrorKind::Lexical,
            span,
            message: message.into(),
        }
    }

    pub fn syntax(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            kind: ParseErrorKind::Syntax,
            span,
            message: message.into(),
        }
    }

    pub fn unsupported(span: Span, construct: impl Into<String>) -> Self {
        let construct = construct.into();
        ParseError {
            message: format!("unsupported construct: {construct}"),
            kind: ParseErrorKind::Unsupported(construct),
            span,
        }
    }

    pub fn validation(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            kind: ParseErrorKind::Validation,
            span,
            message: message.into(),
        }
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self.kind, ParseErrorKind::Unsupported(_))
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

impl std::error::Error for ParseError {}

fn number_block(body: &mut [Stmt], next: &mut usize) {
    for s in body {
        s.index = *next;
        *next += 1;
        if let StmtKind::If {
            then_body,
            else_body,
            ..
        } = &mut s.kind
        {
            number_block(then_body, next);
            number_block(else_body, next);
        }
    }
}

/// Assign pre-order statement ordinals per function and modifier.
fn number_statements(ast: &mut ContractAST) {
    for f in ast.functions.iter_mut().chain(ast.constructor.iter_mut()) {
        number_block(&mut f.body, &mut 0);
    }
    for m in &mut ast.modifiers {
        number_block(&mut m.body, &mut 0);
    }
}

/// Parse and validate one MiniSol contract.
pub fn parse(source: &str) -> Result<ContractAST, ParseError> {
    let toks = lexer::tokenize(source)?;
    let mut ast = parser::Parser::new(toks).parse_source()?;
    number_statements(&mut ast);
    validate::validate(&ast)?;
    Ok(ast)
}
