//! Manchester-syntax subset for class expressions.
//!
//! ```text
//! expr    := or
//! or      := and ('or' and)*
//! and     := unary ('and' unary)*
//! unary   := primary
//!          | PROP ('only' | 'some') unary
//!          | PROP ('max' | 'min') NAT unary
//! primary := 'Thing' | 'Nothing' | NAME | '(' expr ')'
//! ```
//!
//! Names are bare identifiers resolved against a knowledge base. `#` starts
//! a comment that runs to the end of the line.

use std::fmt;

use thiserror::Error;

use crate::kb::{canonicalize, ClassExpression, KnowledgeBase, NOTHING, THING};

/// Renders `e` as it is structured; canonicalize first for a stable form.
///
/// `and` binds tighter than `or`, so conjunctions inside disjunctions are
/// written bare. Restrictions used as operands of `and`/`or`, and `and`/`or`
/// used as restriction fillers, are parenthesized.
pub fn render(e: &ClassExpression) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn write_expr(e: &ClassExpression, out: &mut String) {
    use ClassExpression as Ce;
    match e {
        Ce::Thing => out.push_str(THING),
        Ce::Nothing => out.push_str(NOTHING),
        Ce::Named(c) => out.push_str(c.as_str()),
        Ce::And(cs) => {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(" and ");
                }
                let wrap = c.is_restriction() || matches!(c, Ce::And(_) | Ce::Or(_));
                write_operand(c, wrap, out);
            }
        }
        Ce::Or(cs) => {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(" or ");
                }
                write_operand(c, c.is_restriction() || matches!(c, Ce::Or(_)), out);
            }
        }
        Ce::Only(p, f) => write_restriction(p.as_str(), "only", None, f, out),
        Ce::Some(p, f) => write_restriction(p.as_str(), "some", None, f, out),
        Ce::MaxCard(p, n, f) => write_restriction(p.as_str(), "max", Some(*n), f, out),
        Ce::MinCard(p, n, f) => write_restriction(p.as_str(), "min", Some(*n), f, out),
    }
}

fn write_operand(e: &ClassExpression, wrap: bool, out: &mut String) {
    if wrap {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_restriction(
    property: &str,
    keyword: &str,
    n: Option<u32>,
    filler: &ClassExpression,
    out: &mut String,
) {
    out.push_str(property);
    out.push(' ');
    out.push_str(keyword);
    out.push(' ');
    if let Some(n) = n {
        out.push_str(&n.to_string());
        out.push(' ');
    }
    let wrap = matches!(filler, ClassExpression::And(_) | ClassExpression::Or(_));
    write_operand(filler, wrap, out);
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {expected}, found {found}")]
    Syntax { offset: usize, expected: String, found: String },
    #[error("unknown name {name:?} at offset {offset}")]
    UnknownName { offset: usize, name: String },
    #[error("name {name:?} at offset {offset} is declared both as a class and as a property")]
    Ambiguous { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownName { offset, .. }
            | ParseError::Ambiguous { offset, .. } => *offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token<'a> {
    Ident(&'a str),
    Nat(u32),
    LParen,
    RParen,
    End,
}

impl fmt::Display for Token<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "{s:?}"),
            Token::Nat(n) => write!(f, "{n}"),
            Token::LParen => f.write_str("'('"),
            Token::RParen => f.write_str("')'"),
            Token::End => f.write_str("end of input"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token<'_>)>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            b'(' => {
                tokens.push((i, Token::LParen));
                i += 1;
            }
            b')' => {
                tokens.push((i, Token::RParen));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n = text[start..i].parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    expected: "a cardinality".into(),
                    found: text[start..i].to_owned(),
                })?;
                tokens.push((start, Token::Nat(n)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'_' | b'-' | b'.'))
                {
                    i += 1;
                }
                tokens.push((start, Token::Ident(&text[start..i])));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap();
                return Err(ParseError::Syntax {
                    offset: i,
                    expected: "a name, a number or a parenthesis".into(),
                    found: format!("{ch:?}"),
                });
            }
        }
    }
    tokens.push((text.len(), Token::End));
    Ok(tokens)
}

struct Parser<'t, 'k> {
    tokens: Vec<(usize, Token<'t>)>,
    pos: usize,
    kb: &'k KnowledgeBase,
}

impl<'t> Parser<'t, '_> {
    fn peek(&self) -> &Token<'t> {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> (usize, Token<'t>) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected: expected.to_owned(),
            found: self.peek().to_string(),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if *self.peek() == Token::Ident(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ClassExpression, ParseError> {
        let mut items = vec![self.and()?];
        while self.eat_keyword("or") {
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { ClassExpression::Or(items) })
    }

    fn and(&mut self) -> Result<ClassExpression, ParseError> {
        let mut items = vec![self.unary()?];
        while self.eat_keyword("and") {
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { ClassExpression::And(items) })
    }

    fn unary(&mut self) -> Result<ClassExpression, ParseError> {
        let (offset, token) = (self.offset(), self.peek().clone());
        let Token::Ident(name) = token else {
            return self.primary();
        };
        if matches!(name, THING | NOTHING) || is_keyword(name) {
            return self.primary();
        }
        let is_class = self.kb.has_class(name);
        let is_property = self.kb.has_property(name);
        match (is_class, is_property) {
            (true, true) => Err(ParseError::Ambiguous { offset, name: name.to_owned() }),
            (false, false) => Err(ParseError::UnknownName { offset, name: name.to_owned() }),
            (true, false) => self.primary(),
            (false, true) => {
                self.bump();
                let property = name;
                if self.eat_keyword("only") {
                    Ok(ClassExpression::only(property, self.unary()?))
                } else if self.eat_keyword("some") {
                    Ok(ClassExpression::some(property, self.unary()?))
                } else if self.eat_keyword("max") {
                    let n = self.cardinality(0)?;
                    Ok(ClassExpression::max(property, n, self.unary()?))
                } else if self.eat_keyword("min") {
                    let n = self.cardinality(1)?;
                    Ok(ClassExpression::min(property, n, self.unary()?))
                } else {
                    Err(self.error("'only', 'some', 'max' or 'min' after a property"))
                }
            }
        }
    }

    fn cardinality(&mut self, least: u32) -> Result<u32, ParseError> {
        match *self.peek() {
            Token::Nat(n) if n >= least => {
                self.bump();
                Ok(n)
            }
            _ if least > 0 => Err(self.error("a positive cardinality")),
            _ => Err(self.error("a cardinality")),
        }
    }

    fn primary(&mut self) -> Result<ClassExpression, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Token::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Token::RParen {
                    return Err(self.error("')'"));
                }
                self.bump();
                Ok(e)
            }
            Token::Ident(THING) => {
                self.bump();
                Ok(ClassExpression::Thing)
            }
            Token::Ident(NOTHING) => {
                self.bump();
                Ok(ClassExpression::Nothing)
            }
            Token::Ident(name) if !is_keyword(name) => {
                if self.kb.has_class(name) && self.kb.has_property(name) {
                    return Err(ParseError::Ambiguous { offset, name: name.to_owned() });
                }
                if !self.kb.has_class(name) {
                    return Err(ParseError::UnknownName { offset, name: name.to_owned() });
                }
                self.bump();
                Ok(ClassExpression::named(name))
            }
            _ => Err(self.error("a class expression")),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "and" | "or" | "only" | "some" | "max" | "min")
}

/// Parses Manchester text into a canonical class expression, resolving
/// names against `kb`.
pub fn parse(text: &str, kb: &KnowledgeBase) -> Result<ClassExpression, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, kb };
    let e = parser.expr()?;
    if *parser.peek() != Token::End {
        return Err(parser.error("end of input"));
    }
    Ok(canonicalize(&e))
}

/// Parses a document holding one expression per line. Blank and
/// comment-only lines are skipped; errors carry the 1-based line number.
pub fn parse_lines(
    text: &str,
    kb: &KnowledgeBase,
) -> Result<Vec<ClassExpression>, (usize, ParseError)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        out.push(parse(body, kb).map_err(|e| (i + 1, e))?);
    }
    Ok(out)
}
