//! A small expression language for scalar model functions of t₂.
//!
//! Grammar: numbers, the variable `t`, the imaginary unit `i`, `+ - * /`, integer powers
//! `^n`, parentheses and the functions `tanh`, `sech2`, `sin`, `exp`. A bare function name
//! means the function applied to `t`, so `"-tanh"` is `-tanh(t)`. Ratios of polynomials are
//! written with `/`. Anything else is rejected.

use crate::error::{Error, Result};
use crate::matcore::C64;
use crate::taylor::{ScalarFn, Taylor};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Tanh,
    Sech2,
    Sin,
    Exp,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Func::Tanh),
            "sech2" => Some(Func::Sech2),
            "sin" => Some(Func::Sin),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(C64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, t: f64, len: usize) -> Taylor {
        match self {
            Node::Num(v) => Taylor::constant(*v, len),
            Node::Var => Taylor::variable(t, len),
            Node::Neg(a) => -&a.eval(t, len),
            Node::Add(a, b) => &a.eval(t, len) + &b.eval(t, len),
            Node::Sub(a, b) => &a.eval(t, len) - &b.eval(t, len),
            Node::Mul(a, b) => &a.eval(t, len) * &b.eval(t, len),
            Node::Div(a, b) => a.eval(t, len).div(&b.eval(t, len)),
            Node::Pow(a, e) => a.eval(t, len).powi(*e),
            Node::Call(f, a) => {
                let u = a.eval(t, len);
                match f {
                    Func::Tanh => u.tanh(),
                    Func::Sech2 => u.sech2(),
                    Func::Sin => u.sin(),
                    Func::Exp => u.exp(),
                }
            }
        }
    }
}

/// A parsed scalar expression in t₂; serializes as its source text.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Expression {
    source: String,
    root: Node,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({:?})", self.source)
    }
}

impl Expression {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("unexpected trailing input in {src:?}")));
        }
        Ok(Self { source: src.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl TryFrom<String> for Expression {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Expression::parse(&s)
    }
}

impl From<Expression> for String {
    fn from(e: Expression) -> String {
        e.source
    }
}

impl ScalarFn for Expression {
    fn taylor(&self, t: f64, order: usize) -> Result<Taylor> {
        let s = self.root.eval(t, order + 1);
        if s.0.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("expression evaluation"));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
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
            let v: f64 = text.parse().map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
            out.push(Tok::Num(v));
        } else if ch.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(ch) {
            out.push(Tok::Op(ch));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {ch:?} in {src:?}")));
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat_op('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let neg = self.eat_op('-');
            match self.tokens.get(self.pos) {
                Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= 64.0 => {
                    let e = *v as i32;
                    self.pos += 1;
                    return Ok(Node::Pow(Box::new(base), if neg { -e } else { e }));
                }
                _ => return Err(Error::Parse("exponent must be an integer literal".into())),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.tokens.get(self.pos).cloned();
        match tok {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(C64::new(v, 0.0)))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat_op(')') {
                    return Err(Error::Parse("missing ')'".into()));
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "t" => Ok(Node::Var),
                    "i" => Ok(Node::Num(C64::new(0.0, 1.0))),
                    _ => {
                        let f = Func::from_name(&name)
                            .ok_or_else(|| Error::Parse(format!("unknown function {name:?}")))?;
                        if self.eat_op('(') {
                            let arg = self.expr()?;
                            if !self.eat_op(')') {
                                return Err(Error::Parse("missing ')'".into()));
                            }
                            Ok(Node::Call(f, Box::new(arg)))
                        } else {
                            Ok(Node::Call(f, Box::new(Node::Var)))
                        }
                    }
                }
            }
            Some(t) => Err(Error::Parse(format!("unexpected token {t:?}"))),
            None => Err(Error::Parse("unexpected end of expression".into())),
        }
    }
}
