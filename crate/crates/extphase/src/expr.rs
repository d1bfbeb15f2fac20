//! A small arithmetic expression language.
//!
//! Grammar: numeric literals, identifiers drawn from a caller-supplied list
//! (typically `t`, `q`, `Q`, `T`, `tau`), the binary operators `+ - * / ^`
//! (`^` binds tightest and is right-associative), unary minus, parentheses and
//! the functions `sin`, `cos`, `exp`, `sqrt`, `tanh`.
//!
//! ```
//! use extphase::expr::Expr;
//! let e = Expr::parse("0.5*(1+0.5*sin(0.3*t))*q^2", &["q", "t"]).unwrap();
//! assert!((e.eval(&[2.0, 0.0]) - 2.0).abs() < 1e-15);
//! ```

use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Tanh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            "tanh" => Some(Func::Tanh),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression bound to an ordered list of variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    vars: Vec<String>,
    root: Node,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn parse_err(source: &str, pos: usize, msg: impl Into<String>) -> Error {
    // pos is a char offset; the language has no newlines in practice but
    // multi-line input is still reported properly.
    let mut line = 1;
    let mut col = 1;
    for (i, c) in source.chars().enumerate() {
        if i == pos {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    Error::Parse { line, col, msg: msg.into() }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit()) {
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
            let v: f64 = text
                .parse()
                .map_err(|_| parse_err(src, start, format!("malformed number '{text}'")))?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => return Err(parse_err(src, start, format!("unexpected character '{c}'"))),
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|t| t.1)
            .unwrap_or_else(|| self.src.chars().count())
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
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

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let at = self.here();
        let tok = match self.toks.get(self.pos) {
            Some((t, _)) => t.clone(),
            None => return Err(parse_err(self.src, at, "unexpected end of expression")),
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    if self.peek() != Some(&Tok::LParen) {
                        return Err(parse_err(self.src, self.here(), format!("expected '(' after '{name}'")));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() == Some(&Tok::Comma) {
                        return Err(parse_err(
                            self.src,
                            self.here(),
                            format!("arity mismatch: '{name}' takes exactly one argument"),
                        ));
                    }
                    self.expect_rparen()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Node::Var(i)),
                    None => Err(parse_err(
                        self.src,
                        at,
                        format!("unknown identifier '{name}' (allowed: {})", self.vars.join(", ")),
                    )),
                }
            }
            Tok::Op(c) => Err(parse_err(self.src, at, format!("unexpected operator '{c}'"))),
            Tok::RParen => Err(parse_err(self.src, at, "unexpected ')'")),
            Tok::Comma => Err(parse_err(self.src, at, "unexpected ','")),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(parse_err(self.src, self.here(), "expected ')'")),
        }
    }
}

impl Expr {
    /// Parse `source`, resolving identifiers against `vars` (position = argument index).
    pub fn parse(source: &str, vars: &[&str]) -> Result<Expr> {
        let toks = tokenize(source)?;
        let mut p = Parser { src: source, toks, pos: 0, vars };
        let root = p.expr()?;
        if p.pos < p.toks.len() {
            return Err(parse_err(source, p.here(), "unexpected trailing input"));
        }
        Ok(Expr {
            source: source.to_string(),
            vars: vars.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// True if the expression mentions variable `i`.
    pub fn uses_var(&self, i: usize) -> bool {
        fn walk(n: &Node, i: usize) -> bool {
            match n {
                Node::Num(_) => false,
                Node::Var(j) => *j == i,
                Node::Neg(a) | Node::Call(_, a) => walk(a, i),
                Node::Bin(_, a, b) => walk(a, i) || walk(b, i),
            }
        }
        walk(&self.root, i)
    }

    /// Constant value if the expression is a bare literal (possibly negated).
    pub fn as_constant(&self) -> Option<f64> {
        match &self.root {
            Node::Num(v) => Some(*v),
            Node::Neg(a) => match a.as_ref() {
                Node::Num(v) => Some(-v),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        eval_node(&self.root, &|i| args[i])
    }

    /// Evaluate with second-order forward derivatives in up to two arguments.
    pub fn eval_jet(&self, args: &[Jet]) -> Jet {
        eval_node(&self.root, &|i| args[i])
    }
}

fn eval_node<S: Scalar>(n: &Node, var: &dyn Fn(usize) -> S) -> S {
    match n {
        Node::Num(v) => S::cst(*v),
        Node::Var(i) => var(*i),
        Node::Neg(a) => -eval_node(a, var),
        Node::Call(f, a) => {
            let u = eval_node(a, var);
            match f {
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
                Func::Exp => u.exp(),
                Func::Sqrt => u.sqrt(),
                Func::Tanh => u.tanh(),
            }
        }
        Node::Bin(op, a, b) => {
            if *op == BinOp::Pow {
                let base = eval_node(a, var);
                if let Some(c) = literal(b) {
                    if c.fract() == 0.0 && c.abs() <= 64.0 {
                        return base.powi(c as i32);
                    }
                    return base.powf(c);
                }
                let e = eval_node(b, var);
                return (base.ln() * e).exp();
            }
            let x = eval_node(a, var);
            let y = eval_node(b, var);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
                BinOp::Pow => unreachable!(),
            }
        }
    }
}

fn literal(n: &Node) -> Option<f64> {
    match n {
        Node::Num(v) => Some(*v),
        Node::Neg(a) => literal(a).map(|v| -v),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2*3^2^0.5 - -4/2", &[]).unwrap();
        let want = 1.0 + 2.0 * 3f64.powf(2f64.powf(0.5)) + 2.0;
        assert!((e.eval(&[]) - want).abs() < 1e-14);
        let e = Expr::parse("-q^2", &["q"]).unwrap();
        assert_eq!(e.eval(&[3.0]), -9.0);
        let e = Expr::parse("2^-1", &[]).unwrap();
        assert_eq!(e.eval(&[]), 0.5);
    }

    #[test]
    fn functions_and_literals() {
        let e = Expr::parse("sqrt(4) + exp(0) + tanh(0) + cos(0) + sin(0) + 1.5e1", &[]).unwrap();
        assert!((e.eval(&[]) - 19.0).abs() < 1e-14);
    }

    #[test]
    fn doubled_operator_is_located() {
        match Expr::parse("q^^2", &["q"]) {
            Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), (1, 3)),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        match Expr::parse("0.5*x^2", &["q", "t"]) {
            Err(Error::Parse { col, msg, .. }) => {
                assert_eq!(col, 5);
                assert!(msg.contains("unknown identifier"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch() {
        let err = Expr::parse("sin(q, t)", &["q", "t"]).unwrap_err();
        assert!(err.to_string().contains("arity"));
    }

    #[test]
    fn unbalanced() {
        assert!(Expr::parse("(q + 1", &["q"]).is_err());
        assert!(Expr::parse("q + 1)", &["q"]).is_err());
        assert!(Expr::parse("", &["q"]).is_err());
    }

    #[test]
    fn jets_match_hand_derivatives() {
        let e = Expr::parse("q^3*sin(t)", &["q", "t"]).unwrap();
        let (q, t) = (1.3, 0.7);
        let j = e.eval_jet(&[Jet::var(q, 0), Jet::var(t, 1)]);
        assert!((j.v - q.powi(3) * t.sin()).abs() < 1e-14);
        assert!((j.d[0] - 3.0 * q * q * t.sin()).abs() < 1e-13);
        assert!((j.d[1] - q.powi(3) * t.cos()).abs() < 1e-13);
        assert!((j.h[0][0] - 6.0 * q * t.sin()).abs() < 1e-13);
        assert!((j.h[0][1] - 3.0 * q * q * t.cos()).abs() < 1e-13);
        assert!((j.h[1][1] + q.powi(3) * t.sin()).abs() < 1e-13);
    }

    #[test]
    fn general_power_jet() {
        let e = Expr::parse("q^t", &["q", "t"]).unwrap();
        let j = e.eval_jet(&[Jet::var(2.0, 0), Jet::var(3.0, 1)]);
        assert!((j.v - 8.0).abs() < 1e-13);
        assert!((j.d[0] - 12.0).abs() < 1e-12);
        assert!((j.d[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
    }
}
