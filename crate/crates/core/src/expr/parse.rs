//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`; the exponent
//! may itself carry a sign (`x^-1`).

use std::collections::HashMap;

use super::{Chart, Expr, Func};

/// Named expressions that may be referenced by identifier while parsing.
pub type Definitions = HashMap<String, Expr>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at column {column}")]
pub struct ParseError {
    pub message: String,
    /// 1-based character column within the source text.
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

impl Lexer {
    fn run(src: &str) -> Result<Lexer, ParseError> {
        let chars: Vec<char> = src.chars().collect();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v = text.parse::<f64>().map_err(|_| ParseError {
                    message: format!("malformed number `{text}`"),
                    column: start + 1,
                })?;
                toks.push((Tok::Num(v), start));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..i].iter().collect()), start));
            } else if "+-*/^()".contains(c) {
                toks.push((Tok::Op(c), i));
                i += 1;
            } else {
                return Err(ParseError {
                    message: format!("unexpected character `{c}`"),
                    column: i + 1,
                });
            }
        }
        toks.push((Tok::End, chars.len()));
        Ok(Lexer { toks })
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    chart: &'a Chart,
    defs: &'a Definitions,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1 + 1
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            message: message.into(),
            column: self.column(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, op: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{op}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = raw(super::Node::Add(lhs, self.term()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = raw(super::Node::Sub(lhs, self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = raw(super::Node::Mul(lhs, self.factor()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = raw(super::Node::Div(lhs, self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            let inner = self.factor()?;
            return Ok(match inner.as_const() {
                Some(c) => Expr::constant(-c),
                None => raw(super::Node::Neg(inner)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exponent = self.factor()?;
            return Ok(raw(super::Node::Pow(base, exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let col = self.column();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::constant(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Op('(') {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(ParseError {
                            message: format!("unknown function `{name}`"),
                            column: col,
                        });
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(raw(super::Node::Call(f, arg)));
                }
                if let Some(i) = self.chart.index_of(&name) {
                    Ok(Expr::var(i))
                } else if let Some(e) = self.defs.get(&name) {
                    Ok(e.clone())
                } else {
                    Err(ParseError {
                        message: format!("unknown identifier `{name}`"),
                        column: col,
                    })
                }
            }
            Tok::End => Err(ParseError {
                message: "unexpected end of input".into(),
                column: col,
            }),
            Tok::Op(c) => Err(ParseError {
                message: format!("unexpected `{c}`"),
                column: col,
            }),
        }
    }
}

// The parser keeps the tree exactly as written; callers simplify if they want.
fn raw(node: super::Node) -> Expr {
    Expr::from_node(node)
}

/// Parses `text` against the coordinates of `chart`.
pub fn parse(text: &str, chart: &Chart) -> Result<Expr, ParseError> {
    parse_with(text, chart, &Definitions::new())
}

/// Like [`parse`], but identifiers that are not coordinates are looked up in
/// `defs` and inlined.
pub fn parse_with(text: &str, chart: &Chart, defs: &Definitions) -> Result<Expr, ParseError> {
    let lexer = Lexer::run(text)?;
    let mut p = Parser {
        toks: lexer.toks,
        pos: 0,
        chart,
        defs,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}
