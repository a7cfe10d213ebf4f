//! Arithmetic expressions in one variable: `+ - * / ^`, unary minus,
//! `sin cos exp`, the constant `pi` and decimal literals.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at column {column} in '{source_text}'")]
pub struct ExprError {
    pub message: String,
    /// 1-based character column.
    pub column: usize,
    pub source_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression, evaluated with [`Expr::eval`].
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    var: String,
    text: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, (String, usize)> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| (format!("bad number '{s}'"), col))?;
            out.push((Tok::Num(v), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else if c == '(' {
            out.push((Tok::LParen, col));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, col));
            i += 1;
        } else {
            return Err((format!("unexpected character '{c}'"), col));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    var: &'a str,
    end_col: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end_col)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, (String, usize)> {
        Err((msg.into(), self.col()))
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Node, (String, usize)> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Node, (String, usize)> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    // unary := '-' unary | '+' unary | power
    fn unary(&mut self) -> Result<Node, (String, usize)> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // power := atom ('^' unary)?, right associative
    fn power(&mut self) -> Result<Node, (String, usize)> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, (String, usize)> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.fail("expected ')'");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                let col = self.col();
                self.pos += 1;
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    _ => None,
                };
                if let Some(f) = func {
                    if self.peek() != Some(&Tok::LParen) {
                        return self.fail(format!("expected '(' after {name}"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(&Tok::RParen) {
                        return self.fail("expected ')'");
                    }
                    self.pos += 1;
                    Ok(Node::Call(f, Box::new(arg)))
                } else if name == "pi" {
                    Ok(Node::Num(PI))
                } else if name == self.var {
                    Ok(Node::Var)
                } else {
                    Err((format!("unknown identifier '{name}'"), col))
                }
            }
            Some(_) => self.fail("expected a number, variable, function or '('"),
            None => self.fail("unexpected end of expression"),
        }
    }
}

impl Expr {
    /// Parses `src` as a function of the variable `var`.
    pub fn parse(src: &str, var: &str) -> Result<Expr, ExprError> {
        let err = |(message, column): (String, usize)| ExprError { message, column, source_text: src.to_string() };
        let toks = tokenize(src).map_err(err)?;
        let end_col = src.chars().count() + 1;
        let mut p = Parser { toks, pos: 0, var, end_col };
        let root = p.expr().map_err(err)?;
        if p.pos != p.toks.len() {
            return Err(err(("unexpected trailing input".to_string(), p.col())));
        }
        Ok(Expr { root, var: var.to_string(), text: src.to_string() })
    }

    pub fn eval(&self, x: f64) -> f64 {
        fn go(n: &Node, x: f64) -> f64 {
            match n {
                Node::Num(v) => *v,
                Node::Var => x,
                Node::Neg(a) => -go(a, x),
                Node::Bin(op, a, b) => {
                    let (a, b) = (go(a, x), go(b, x));
                    match op {
                        '+' => a + b,
                        '-' => a - b,
                        '*' => a * b,
                        '/' => a / b,
                        _ => a.powf(b),
                    }
                }
                Node::Call(f, a) => {
                    let a = go(a, x);
                    match f {
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Exp => a.exp(),
                    }
                }
            }
        }
        go(&self.root, x)
    }

    pub fn variable(&self) -> &str {
        &self.var
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}
