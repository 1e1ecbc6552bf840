//! A small arithmetic expression language for fixtures and boundary data.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = ("+" | "-") unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | ident | func "(" expr ")" | "(" expr ")" ;
//! func    = "exp" | "sin" | "cos" ;
//! ident   = "x" index | "y" index | "rho" | "psi" ;
//! ```
//!
//! `^` is right associative and binds tighter than unary minus, so
//! `-x1^2 = -(x1^2)`. Evaluation fails instead of returning a non-finite value.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{sq_norm, GrushinParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Coordinate by position in the flat `(x, y)` vector.
    Coord(usize),
    Rho,
    Psi,
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

/// A parsed expression bound to the dimensions it was checked against.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    source: String,
    params: GrushinParams,
    root: Expr,
}

impl Expression {
    pub fn parse(source: &str, params: &GrushinParams) -> Result<Self> {
        let tokens = lex(source)?;
        let mut p = Parser { tokens, pos: 0, params };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self { source: source.to_string(), params: *params, root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.root
    }

    /// Evaluates at flat coordinates `(x_1..x_m, y_1..y_n)`.
    pub fn eval(&self, coords: &[f64]) -> Result<f64> {
        if coords.len() != self.params.dim() {
            return Err(Error::DimensionMismatch { expected: self.params.dim(), got: coords.len() });
        }
        let v = self.eval_node(&self.root, coords);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!("'{}' is not finite at {:?}", self.source, coords)))
        }
    }

    fn eval_node(&self, e: &Expr, c: &[f64]) -> f64 {
        match e {
            Expr::Num(v) => *v,
            Expr::Coord(k) => c[*k],
            Expr::Rho | Expr::Psi => {
                let m = self.params.m();
                let k = self.params.kernel();
                let (x2, y2) = (sq_norm(&c[..m]), sq_norm(&c[m..]));
                if matches!(e, Expr::Rho) {
                    k.rho(x2, y2)
                } else {
                    k.psi(x2, k.rho2(x2, y2))
                }
            }
            Expr::Neg(a) => -self.eval_node(a, c),
            Expr::Call(f, a) => {
                let v = self.eval_node(a, c);
                match f {
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
            Expr::Bin(op, a, b) => {
                let (a, b) = (self.eval_node(a, c), self.eval_node(b, c));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => {
                        if b == b.trunc() && b.abs() <= 64.0 {
                            a.powi(b as i32)
                        } else {
                            a.powf(b)
                        }
                    }
                }
            }
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' | '-' | '−' | '*' | '×' | '/' | '^' => {
                let op = match c {
                    '−' => '-',
                    '×' => '*',
                    other => other,
                };
                out.push((pos, Tok::Op(op)));
                i += 1;
            }
            '(' => {
                out.push((pos, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((pos, Tok::RParen));
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].1.is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad number '{text}' at offset {pos}")))?;
                out.push((pos, Tok::Num(v)));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push((pos, Tok::Ident(chars[start..i].iter().map(|&(_, c)| c).collect())));
            }
            other => {
                return Err(Error::InvalidParameter(format!("unexpected character '{other}' at offset {pos}")));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    params: &'a GrushinParams,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn error(&self, msg: &str) -> Error {
        let at = self.tokens.get(self.pos).map(|(p, _)| format!("offset {p}")).unwrap_or_else(|| "end of input".into());
        Error::InvalidParameter(format!("expression: {msg} at {at}"))
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        if let Some(Tok::Op(c)) = self.peek() {
            if ops.contains(c) {
                let c = *c;
                self.pos += 1;
                return Some(c);
            }
        }
        None
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.eat_op(&['+', '-']) {
            Some('-') => Ok(Expr::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let tok = self.peek().cloned().ok_or_else(|| self.error("unexpected end"))?;
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "exp" => Some(Func::Exp),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    _ => None,
                };
                if let Some(f) = func {
                    if self.peek() != Some(&Tok::LParen) {
                        return Err(self.error("expected '(' after function name"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                self.variable(&name)
            }
            _ => Err(self.error("expected a number, variable, function or '('")),
        }
    }

    fn variable(&self, name: &str) -> Result<Expr> {
        match name {
            "rho" => return Ok(Expr::Rho),
            "psi" => return Ok(Expr::Psi),
            _ => {}
        }
        let (block, digits) = name.split_at(1);
        let idx: Option<usize> = digits.parse().ok().filter(|&i| i >= 1);
        let (m, n) = (self.params.m(), self.params.n());
        match (block, idx) {
            ("x", Some(i)) if i <= m => Ok(Expr::Coord(i - 1)),
            ("y", Some(i)) if i <= n => Ok(Expr::Coord(m + i - 1)),
            ("x", Some(_)) | ("y", Some(_)) => Err(Error::InvalidParameter(format!(
                "variable '{name}' out of range for m = {m}, n = {n}"
            ))),
            _ => Err(Error::InvalidParameter(format!("unknown identifier '{name}'"))),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error("expected ')'"))
        }
    }
}
