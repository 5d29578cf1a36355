//! A small arithmetic language for scenario functions `f(theta)` and kernel
//! coefficient formulas `a(n)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?          // right associative
//! primary := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
//! number  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//! ```
//!
//! Identifiers are the free variable (`theta`, alias `θ`, or `n`), the
//! constants `pi` and `e`, and the functions `sin cos exp ln sqrt abs gamma`
//! (one argument) and `min max` (two arguments). There is no implicit
//! multiplication.

use std::fmt;

use thiserror::Error;

use crate::special;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error at byte {offset}: {message}")]
    Domain { offset: usize, message: String },
}

/// Which identifier names the free variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeVar {
    /// `theta` or `θ`
    Theta,
    /// `n`, for coefficient formulas
    N,
}

impl FreeVar {
    fn matches(self, ident: &str) -> bool {
        match self {
            FreeVar::Theta => ident == "theta" || ident == "θ",
            FreeVar::N => ident == "n",
        }
    }

    fn name(self) -> &'static str {
        match self {
            FreeVar::Theta => "theta",
            FreeVar::N => "n",
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

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Gamma,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "gamma" => Func::Gamma,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Gamma => "gamma",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    E,
    Var,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// A node plus the byte offset it was parsed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub node: Node,
    pub offset: usize,
}

/// A parsed expression in one free variable.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionExpr {
    root: Expr,
    var: FreeVar,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let t = lx.next_token()?;
            let done = t.0 == Tok::End;
            out.push(t);
            if done {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            return self.number(start);
        }
        if c.is_alphabetic() || c == '_' {
            while let Some(c) = self.peek() {
                if c.is_alphanumeric() || c == '_' {
                    self.pos += c.len_utf8();
                } else {
                    break;
                }
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        if "+-*/^(),".contains(c) {
            self.pos += 1;
            return Ok((Tok::Op(c), start));
        }
        Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{c}`"),
        })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let s = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - s
        };
        let mut pos = self.pos;
        let mut count = digits(&mut pos);
        if pos < bytes.len() && bytes[pos] == b'.' {
            pos += 1;
            count += digits(&mut pos);
        }
        if count == 0 {
            return Err(ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
            let mut p = pos + 1;
            if p < bytes.len() && (bytes[p] == b'+' || bytes[p] == b'-') {
                p += 1;
            }
            if digits(&mut p) == 0 {
                return Err(ParseError::Syntax {
                    offset: pos,
                    message: "exponent has no digits".into(),
                });
            }
            pos = p;
        }
        let text = &self.src[start..pos];
        let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        if !v.is_finite() {
            return Err(ParseError::Syntax {
                offset: start,
                message: format!("literal `{text}` overflows"),
            });
        }
        self.pos = pos;
        Ok((Tok::Num(v), start))
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    var: FreeVar,
    depth: usize,
}

const MAX_NESTING: usize = 256;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn offset(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected `{c}`"))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return self.syntax("expression nested too deeply");
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let (_, offset) = self.bump();
            let rhs = self.term()?;
            lhs = Expr {
                node: Node::Bin(op, Box::new(lhs), Box::new(rhs)),
                offset,
            };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            let (_, offset) = self.bump();
            let rhs = self.unary()?;
            lhs = Expr {
                node: Node::Bin(op, Box::new(lhs), Box::new(rhs)),
                offset,
            };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let out = if *self.peek() == Tok::Op('-') {
            let (_, offset) = self.bump();
            let inner = self.unary()?;
            Ok(Expr {
                node: Node::Neg(Box::new(inner)),
                offset,
            })
        } else {
            self.power()
        };
        self.depth -= 1;
        out
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            let (_, offset) = self.bump();
            let exp = self.unary()?;
            return Ok(Expr {
                node: Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)),
                offset,
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr {
                node: Node::Num(v),
                offset,
            }),
            Tok::Op('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(name, offset),
            Tok::End => Err(ParseError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
            Tok::Op(c) => Err(ParseError::Syntax {
                offset,
                message: format!("unexpected `{c}`"),
            }),
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        if let Some(func) = Func::lookup(&name) {
            if *self.peek() != Tok::Op('(') {
                return self.syntax(format!("expected `(` after `{name}`"));
            }
            self.bump();
            let mut args = vec![self.expr()?];
            while *self.peek() == Tok::Op(',') {
                self.bump();
                args.push(self.expr()?);
            }
            self.expect(')')?;
            if args.len() != func.arity() {
                return Err(ParseError::Arity {
                    name,
                    offset,
                    expected: func.arity(),
                    got: args.len(),
                });
            }
            return Ok(Expr {
                node: Node::Call(func, args),
                offset,
            });
        }
        let node = if self.var.matches(&name) {
            Node::Var
        } else if name == "pi" {
            Node::Pi
        } else if name == "e" {
            Node::E
        } else {
            return Err(ParseError::UnknownIdentifier { name, offset });
        };
        Ok(Expr { node, offset })
    }
}

/// Parses `src` as an expression in the free variable `var`.
pub fn parse(src: &str, var: FreeVar) -> Result<FunctionExpr, ParseError> {
    if src.trim().is_empty() {
        return Err(ParseError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let toks = Lexer::tokens(src)?;
    let mut p = Parser {
        toks,
        at: 0,
        var,
        depth: 0,
    };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(FunctionExpr { root, var })
}

fn domain<T>(offset: usize, message: impl Into<String>) -> Result<T, EvalError> {
    Err(EvalError::Domain {
        offset,
        message: message.into(),
    })
}

fn eval_node(e: &Expr, x: f64) -> Result<f64, EvalError> {
    let v = match &e.node {
        Node::Num(v) => *v,
        Node::Pi => std::f64::consts::PI,
        Node::E => std::f64::consts::E,
        Node::Var => x,
        Node::Neg(inner) => -eval_node(inner, x)?,
        Node::Bin(op, l, r) => {
            let a = eval_node(l, x)?;
            let b = eval_node(r, x)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return domain(e.offset, "division by zero");
                    }
                    a / b
                }
                BinOp::Pow => {
                    if a < 0.0 && b.fract() != 0.0 {
                        return domain(e.offset, format!("negative base {a} to non-integer power {b}"));
                    }
                    if a == 0.0 && b < 0.0 {
                        return domain(e.offset, "zero to a negative power");
                    }
                    a.powf(b)
                }
            }
        }
        Node::Call(f, args) => {
            let a = eval_node(&args[0], x)?;
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
                Func::Ln => {
                    if a <= 0.0 {
                        return domain(e.offset, format!("ln of nonpositive value {a}"));
                    }
                    a.ln()
                }
                Func::Sqrt => {
                    if a < 0.0 {
                        return domain(e.offset, format!("sqrt of negative value {a}"));
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
                Func::Gamma => match special::gamma(a) {
                    Ok(g) => g,
                    Err(crate::error::Error::Overflow(_)) => f64::INFINITY,
                    Err(err) => return domain(e.offset, err.to_string()),
                },
                Func::Min => a.min(eval_node(&args[1], x)?),
                Func::Max => a.max(eval_node(&args[1], x)?),
            }
        }
    };
    if v.is_nan() {
        return domain(e.offset, "result is not a number");
    }
    Ok(v)
}

impl FunctionExpr {
    /// Evaluates at `value`; the result is finite or a typed error.
    pub fn eval(&self, value: f64) -> Result<f64, EvalError> {
        let v = eval_node(&self.root, value)?;
        if !v.is_finite() {
            return domain(self.root.offset, format!("result {v} is not finite"));
        }
        Ok(v)
    }

    pub fn free_var(&self) -> FreeVar {
        self.var
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }
}

/// Convenience: parse and evaluate once.
pub fn eval(e: &FunctionExpr, value: f64) -> Result<f64, EvalError> {
    e.eval(value)
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, var: FreeVar) -> fmt::Result {
    match &e.node {
        Node::Num(v) => write!(f, "{v}"),
        Node::Pi => f.write_str("pi"),
        Node::E => f.write_str("e"),
        Node::Var => f.write_str(var.name()),
        Node::Neg(inner) => {
            f.write_str("(-")?;
            write_expr(f, inner, var)?;
            f.write_str(")")
        }
        Node::Bin(op, l, r) => {
            f.write_str("(")?;
            write_expr(f, l, var)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, r, var)?;
            f.write_str(")")
        }
        Node::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_expr(f, a, var)?;
            }
            f.write_str(")")
        }
    }
}

/// Fully parenthesized; parsing the output gives back the same tree shape.
impl fmt::Display for FunctionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, &self.root, self.var)
    }
}
