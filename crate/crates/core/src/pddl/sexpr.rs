//! Minimal s-expression reader with byte spans. Identifiers are lowercased.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
}

impl SourceSpan {
    pub fn at(text: &str, start: usize, end: usize) -> Self {
        let start = start.min(text.len());
        let end = end.clamp(start, text.len());
        let before = &text[..start];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map(|i| i + 1).unwrap_or(0);
        let column = text[line_start..start].chars().count() + 1;
        SourceSpan { start, end, line, column }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq, Serialize, Deserialize)]
#[error("{span}: {message}{}", expected_suffix(.expected))]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
    pub expected: Vec<String>,
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(" or "))
    }
}

impl ParseError {
    pub fn new(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseError { message: message.into(), span, expected: Vec::new() }
    }

    pub fn expecting(message: impl Into<String>, span: SourceSpan, expected: &[&str]) -> Self {
        ParseError {
            message: message.into(),
            span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SExpr {
    Atom(String, SourceSpan),
    List(Vec<SExpr>, SourceSpan),
}

impl SExpr {
    pub fn span(&self) -> SourceSpan {
        match self {
            SExpr::Atom(_, s) | SExpr::List(_, s) => *s,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a, _) => Some(a),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    pub fn expect_atom(&self, what: &str) -> Result<&str, ParseError> {
        self.as_atom()
            .ok_or_else(|| ParseError::expecting(format!("expected {what}, found a list"), self.span(), &[what]))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[SExpr], ParseError> {
        self.as_list()
            .ok_or_else(|| ParseError::expecting(format!("expected {what}, found an atom"), self.span(), &[what]))
    }

    /// The leading keyword of a list such as `(:action ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(SExpr::as_atom)
    }
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || c == '(' || c == ')' || c == ';'
}

/// Parse exactly one top-level expression; trailing non-comment text is an error.
pub fn parse_one(text: &str) -> Result<SExpr, ParseError> {
    let mut stack: Vec<(Vec<SExpr>, usize)> = Vec::new();
    let mut done: Option<SExpr> = None;
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == ';' {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        if done.is_some() {
            return Err(ParseError::new("unexpected text after the top-level expression", SourceSpan::at(text, i, i + c.len_utf8())));
        }
        match c {
            '(' => {
                chars.next();
                stack.push((Vec::new(), i));
            }
            ')' => {
                chars.next();
                let Some((items, start)) = stack.pop() else {
                    return Err(ParseError::new("unbalanced ')'", SourceSpan::at(text, i, i + 1)));
                };
                let list = SExpr::List(items, SourceSpan::at(text, start, i + 1));
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => done = Some(list),
                }
            }
            _ => {
                let start = i;
                let mut end = i;
                while let Some(&(j, c)) = chars.peek() {
                    if is_delim(c) {
                        break;
                    }
                    end = j + c.len_utf8();
                    chars.next();
                }
                let atom = SExpr::Atom(text[start..end].to_lowercase(), SourceSpan::at(text, start, end));
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => done = Some(atom),
                }
            }
        }
    }
    if let Some((_, start)) = stack.last() {
        return Err(ParseError::expecting("unterminated list", SourceSpan::at(text, *start, text.len()), &["')'"]));
    }
    done.ok_or_else(|| ParseError::expecting("empty input", SourceSpan::at(text, 0, text.len()), &["'('"]))
}
