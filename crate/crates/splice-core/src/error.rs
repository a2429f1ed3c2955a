//! Shared error types for parsing and type checking.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct SyntaxError {
    pub message: String,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("type error at {line}:{col}: {message}")]
pub struct TypeError {
    pub message: String,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LangError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

impl LangError {
    pub fn is_type_error(&self) -> bool {
        matches!(self, LangError::Type(_))
    }
}
