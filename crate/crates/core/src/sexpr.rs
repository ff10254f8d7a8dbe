//! Minimal s-expression reader for the prefix notation used in domain files.

use std::fmt;

use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    Atom(String),
    List(Vec<Sexpr>),
}

impl Sexpr {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(a) => Some(a),
            Sexpr::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items) => Some(items),
            Sexpr::Atom(_) => None,
        }
    }
}

impl fmt::Display for Sexpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexpr::Atom(a) => f.write_str(a),
            Sexpr::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn tokenize(input: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in input.chars() {
        match ch {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Parses exactly one expression; trailing input is an error.
pub fn parse(input: &str) -> Result<Sexpr, ParseError> {
    let tokens = tokenize(input);
    let mut pos = 0;
    let expr = parse_at(&tokens, &mut pos, input)?;
    if pos != tokens.len() {
        return Err(ParseError::new(input, "trailing tokens after expression"));
    }
    Ok(expr)
}

fn parse_at(tokens: &[String], pos: &mut usize, src: &str) -> Result<Sexpr, ParseError> {
    let Some(tok) = tokens.get(*pos) else {
        return Err(ParseError::new(src, "unexpected end of input"));
    };
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos).map(String::as_str) {
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sexpr::List(items));
                    }
                    Some(_) => items.push(parse_at(tokens, pos, src)?),
                    None => return Err(ParseError::new(src, "unbalanced parentheses")),
                }
            }
        }
        ")" => Err(ParseError::new(src, "unexpected ')'")),
        atom => Ok(Sexpr::Atom(atom.to_string())),
    }
}
