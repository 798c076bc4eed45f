//! Small arithmetic expression language used for user-defined maps and radius fields.
//!
//! Grammar (usual precedence, `^` right associative):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Variables are `x`, `y`, `t` (same as `x`) and `r` (a radius, only meaningful in
//! Lipschitz-bound expressions). Constants `pi` and `e`.

use std::fmt;
use std::str::FromStr;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expression error at byte {pos}: {msg}")]
pub struct ExprError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func1 {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Atan,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func2 {
    Min,
    Max,
    Atan2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call1(Func1, Box<Node>),
    Call2(Func2, Box<Node>, Box<Node>),
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut p = Parser { src, pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expr {
            source: src.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Whether the expression mentions `v`.
    pub fn uses(&self, v: Var) -> bool {
        fn walk(n: &Node, v: Var) -> bool {
            match n {
                Node::Num(_) => false,
                Node::Var(w) => *w == v,
                Node::Neg(a) | Node::Call1(_, a) => walk(a, v),
                Node::Bin(_, a, b) | Node::Call2(_, a, b) => walk(a, v) || walk(b, v),
            }
        }
        walk(&self.root, v)
    }

    pub fn eval<S: Scalar>(&self, x: S, y: S, r: S) -> S {
        eval(&self.root, x, y, r)
    }
}

impl FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn eval<S: Scalar>(n: &Node, x: S, y: S, r: S) -> S {
    match n {
        Node::Num(v) => S::lit(*v),
        Node::Var(Var::X) => x,
        Node::Var(Var::Y) => y,
        Node::Var(Var::R) => r,
        Node::Neg(a) => -eval(a, x, y, r),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, y, r), eval(b, x, y, r));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            }
        }
        Node::Call1(f, a) => {
            let a = eval(a, x, y, r);
            match f {
                Func1::Exp => a.exp(),
                Func1::Ln => a.ln(),
                Func1::Sin => a.sin(),
                Func1::Cos => a.cos(),
                Func1::Tan => a.tan(),
                Func1::Atan => a.atan(),
                Func1::Sqrt => a.sqrt(),
                Func1::Abs => a.abs(),
                Func1::Sinh => a.sinh(),
                Func1::Cosh => a.cosh(),
                Func1::Tanh => a.tanh(),
            }
        }
        Node::Call2(f, a, b) => {
            let (a, b) = (eval(a, x, y, r), eval(b, x, y, r));
            match f {
                Func2::Min => a.min(b),
                Func2::Max => a.max(b),
                Func2::Atan2 => a.atan2(b),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ExprError {
        ExprError {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Bin(BinOp::Add, Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Bin(BinOp::Sub, Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Bin(BinOp::Mul, Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Bin(BinOp::Div, Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            Some(c) => Err(self.err(&format!("unexpected character `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let v: f64 = text
            .parse()
            .map_err(|_| self.err(&format!("bad number `{text}`")))?;
        self.pos = end;
        Ok(Node::Num(v))
    }

    fn name(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        let name = &self.src[start..end];
        self.pos = end;
        self.skip_ws();
        if self.peek() == Some('(') {
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while self.eat(',') {
                args.push(self.expr()?);
            }
            if !self.eat(')') {
                return Err(self.err("expected `)` after arguments"));
            }
            return self.call(name, start, args);
        }
        match name {
            "x" | "t" => Ok(Node::Var(Var::X)),
            "y" => Ok(Node::Var(Var::Y)),
            "r" => Ok(Node::Var(Var::R)),
            "pi" => Ok(Node::Num(std::f64::consts::PI)),
            "e" => Ok(Node::Num(std::f64::consts::E)),
            _ => Err(ExprError {
                pos: start,
                msg: format!("unknown name `{name}`"),
            }),
        }
    }

    fn call(&self, name: &str, at: usize, mut args: Vec<Node>) -> Result<Node, ExprError> {
        let f1 = match name {
            "exp" => Some(Func1::Exp),
            "ln" | "log" => Some(Func1::Ln),
            "sin" => Some(Func1::Sin),
            "cos" => Some(Func1::Cos),
            "tan" => Some(Func1::Tan),
            "atan" => Some(Func1::Atan),
            "sqrt" => Some(Func1::Sqrt),
            "abs" => Some(Func1::Abs),
            "sinh" => Some(Func1::Sinh),
            "cosh" => Some(Func1::Cosh),
            "tanh" => Some(Func1::Tanh),
            _ => None,
        };
        let f2 = match name {
            "min" => Some(Func2::Min),
            "max" => Some(Func2::Max),
            "atan2" => Some(Func2::Atan2),
            _ => None,
        };
        let arity_err = |n: usize| ExprError {
            pos: at,
            msg: format!("`{name}` takes {n} argument(s), got {}", args.len()),
        };
        if let Some(f) = f1 {
            if args.len() != 1 {
                return Err(arity_err(1));
            }
            return Ok(Node::Call1(f, Box::new(args.remove(0))));
        }
        if let Some(f) = f2 {
            if args.len() != 2 {
                return Err(arity_err(2));
            }
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            return Ok(Node::Call2(f, Box::new(a), Box::new(b)));
        }
        Err(ExprError {
            pos: at,
            msg: format!("unknown function `{name}`"),
        })
    }
}
