//! Scalar expressions over the state symbols `x1..xn` and control symbols
//! `u1..ur`, with exact first derivatives via forward-mode dual numbers.
//!
//! The grammar is deliberately time-free: there is no `t` symbol, so every
//! expression is autonomous by construction.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | power
//! power  := atom ("^" unary)?          // right-associative
//! atom   := number | symbol | func "(" expr ")" | "(" expr ")"
//! symbol := ("x" | "u") digits
//! func   := "sin" | "cos" | "exp" | "log" | "sqrt" | "abs"
//! ```

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("expected {expected} {kind} values, got {got}")]
    Dimension {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
}

fn syntax(offset: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        offset,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 4,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => " + ",
            BinaryOp::Sub => " - ",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    /// Zero-based state index, prints as `x{i+1}`.
    State(usize),
    /// Zero-based control index, prints as `u{i+1}`.
    Control(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

/// A scalar dual number: value plus directional derivative along a seed.
///
/// Arithmetic follows the chain rule exactly, so one evaluation pass with a
/// unit seed on coordinate `i` yields the partial derivative with respect to
/// that coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub fn constant(value: f64) -> Self {
        Dual { value, deriv: 0.0 }
    }

    pub fn seeded(value: f64, deriv: f64) -> Self {
        Dual { value, deriv }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value + rhs.value,
            deriv: self.deriv + rhs.deriv,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value - rhs.value,
            deriv: self.deriv - rhs.deriv,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value * rhs.value,
            deriv: self.deriv * rhs.value + self.value * rhs.deriv,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        Dual {
            value: self.value / rhs.value,
            deriv: (self.deriv * rhs.value - self.value * rhs.deriv) / (rhs.value * rhs.value),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            value: -self.value,
            deriv: -self.deriv,
        }
    }
}

/// Gradient of an expression with respect to one symbol family.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub values: Vec<f64>,
    /// Set when the evaluation point sits on a kink of `abs`; the
    /// corresponding entries carry the subgradient value 0.
    pub nonsmooth: bool,
}

/// Parsed, immutable expression over `x1..xn` and `u1..ur`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprTree {
    root: Node,
    n: usize,
    r: usize,
}

pub fn parse(source: &str, n: usize, r: usize) -> Result<ExprTree, ExprError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        n,
        r,
        end: source.len(),
    };
    let root = parser.parse_expr()?;
    if let Some(tok) = parser.peek() {
        return Err(syntax(tok.offset, format!("unexpected `{}`", tok.kind.describe())));
    }
    Ok(ExprTree { root, n, r })
}

impl ExprTree {
    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn control_dim(&self) -> usize {
        self.r
    }

    pub fn node_count(&self) -> usize {
        fn count(node: &Node) -> usize {
            match node {
                Node::Const(_) | Node::State(_) | Node::Control(_) => 1,
                Node::Unary(_, a) => 1 + count(a),
                Node::Binary(_, a, b) => 1 + count(a) + count(b),
            }
        }
        count(&self.root)
    }

    fn check_dims(&self, x: &[f64], u: &[f64]) -> Result<(), ExprError> {
        if x.len() != self.n {
            return Err(ExprError::Dimension {
                kind: "state",
                expected: self.n,
                got: x.len(),
            });
        }
        if u.len() != self.r {
            return Err(ExprError::Dimension {
                kind: "control",
                expected: self.r,
                got: u.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<f64, ExprError> {
        self.check_dims(x, u)?;
        let mut nonsmooth = false;
        let d = eval_node(
            &self.root,
            &|i| Dual::constant(x[i]),
            &|j| Dual::constant(u[j]),
            &mut nonsmooth,
        )?;
        Ok(d.value)
    }

    /// Value and directional derivative along seed vectors `(dx, du)`.
    pub fn eval_dual(
        &self,
        x: &[f64],
        u: &[f64],
        dx: &[f64],
        du: &[f64],
    ) -> Result<(Dual, bool), ExprError> {
        self.check_dims(x, u)?;
        let mut nonsmooth = false;
        let d = eval_node(
            &self.root,
            &|i| Dual::seeded(x[i], dx[i]),
            &|j| Dual::seeded(u[j], du[j]),
            &mut nonsmooth,
        )?;
        Ok((d, nonsmooth))
    }

    /// Partial derivatives with respect to every state coordinate, one dual
    /// pass per coordinate with a unit seed.
    pub fn grad_x(&self, x: &[f64], u: &[f64]) -> Result<Gradient, ExprError> {
        self.check_dims(x, u)?;
        let mut values = Vec::with_capacity(self.n);
        let mut nonsmooth = false;
        for i in 0..self.n {
            let mut flag = false;
            let d = eval_node(
                &self.root,
                &|k| Dual::seeded(x[k], if k == i { 1.0 } else { 0.0 }),
                &|j| Dual::constant(u[j]),
                &mut flag,
            )?;
            values.push(d.deriv);
            nonsmooth |= flag;
        }
        Ok(Gradient { values, nonsmooth })
    }

    /// Partial derivatives with respect to every control coordinate.
    pub fn grad_u(&self, x: &[f64], u: &[f64]) -> Result<Gradient, ExprError> {
        self.check_dims(x, u)?;
        let mut values = Vec::with_capacity(self.r);
        let mut nonsmooth = false;
        for j in 0..self.r {
            let mut flag = false;
            let d = eval_node(
                &self.root,
                &|k| Dual::constant(x[k]),
                &|m| Dual::seeded(u[m], if m == j { 1.0 } else { 0.0 }),
                &mut flag,
            )?;
            values.push(d.deriv);
            nonsmooth |= flag;
        }
        Ok(Gradient { values, nonsmooth })
    }
}

fn finite(d: Dual, what: &str) -> Result<Dual, ExprError> {
    if d.value.is_finite() {
        Ok(d)
    } else {
        Err(ExprError::Domain(format!("{what} produced a non-finite value")))
    }
}

fn eval_node(
    node: &Node,
    x: &dyn Fn(usize) -> Dual,
    u: &dyn Fn(usize) -> Dual,
    nonsmooth: &mut bool,
) -> Result<Dual, ExprError> {
    match node {
        Node::Const(c) => Ok(Dual::constant(*c)),
        Node::State(i) => Ok(x(*i)),
        Node::Control(j) => Ok(u(*j)),
        Node::Unary(op, a) => {
            let a = eval_node(a, x, u, nonsmooth)?;
            match op {
                UnaryOp::Neg => Ok(-a),
                UnaryOp::Sin => Ok(Dual {
                    value: a.value.sin(),
                    deriv: a.value.cos() * a.deriv,
                }),
                UnaryOp::Cos => Ok(Dual {
                    value: a.value.cos(),
                    deriv: -a.value.sin() * a.deriv,
                }),
                UnaryOp::Exp => {
                    let e = a.value.exp();
                    finite(
                        Dual {
                            value: e,
                            deriv: e * a.deriv,
                        },
                        "exp",
                    )
                }
                UnaryOp::Log => {
                    if a.value <= 0.0 {
                        return Err(ExprError::Domain(format!(
                            "log of non-positive argument {}",
                            a.value
                        )));
                    }
                    Ok(Dual {
                        value: a.value.ln(),
                        deriv: a.deriv / a.value,
                    })
                }
                UnaryOp::Sqrt => {
                    if a.value < 0.0 {
                        return Err(ExprError::Domain(format!(
                            "sqrt of negative argument {}",
                            a.value
                        )));
                    }
                    if a.value == 0.0 && a.deriv != 0.0 {
                        return Err(ExprError::Domain(
                            "sqrt derivative at zero".to_string(),
                        ));
                    }
                    let s = a.value.sqrt();
                    Ok(Dual {
                        value: s,
                        deriv: if a.deriv == 0.0 { 0.0 } else { a.deriv / (2.0 * s) },
                    })
                }
                UnaryOp::Abs => {
                    if a.value == 0.0 {
                        // Kink: report the subgradient value 0 and flag it.
                        if a.deriv != 0.0 {
                            *nonsmooth = true;
                        }
                        Ok(Dual {
                            value: 0.0,
                            deriv: 0.0,
                        })
                    } else {
                        Ok(Dual {
                            value: a.value.abs(),
                            deriv: a.value.signum() * a.deriv,
                        })
                    }
                }
            }
        }
        Node::Binary(op, a, b) => {
            let a = eval_node(a, x, u, nonsmooth)?;
            let b = eval_node(b, x, u, nonsmooth)?;
            match op {
                BinaryOp::Add => Ok(a + b),
                BinaryOp::Sub => Ok(a - b),
                BinaryOp::Mul => Ok(a * b),
                BinaryOp::Div => {
                    if b.value == 0.0 {
                        return Err(ExprError::Domain("division by zero".to_string()));
                    }
                    Ok(a / b)
                }
                BinaryOp::Pow => pow_dual(a, b),
            }
        }
    }
}

fn pow_dual(base: Dual, exponent: Dual) -> Result<Dual, ExprError> {
    let v = base.value.powf(exponent.value);
    if !v.is_finite() {
        return Err(ExprError::Domain(format!(
            "{}^{} is not finite",
            base.value, exponent.value
        )));
    }
    if exponent.deriv == 0.0 {
        // Constant exponent: d/ds base^c = c * base^(c-1) * base'. Valid for
        // negative bases as long as the exponent is integral (powf already
        // rejects the rest with a NaN).
        let c = exponent.value;
        let deriv = if base.deriv == 0.0 || c == 0.0 {
            0.0
        } else {
            c * base.value.powf(c - 1.0) * base.deriv
        };
        if !deriv.is_finite() {
            return Err(ExprError::Domain(format!(
                "derivative of {}^{} is not finite",
                base.value, exponent.value
            )));
        }
        Ok(Dual { value: v, deriv })
    } else {
        if base.value <= 0.0 {
            return Err(ExprError::Domain(format!(
                "{}^e with varying exponent requires a positive base",
                base.value
            )));
        }
        let deriv = v * (exponent.deriv * base.value.ln() + exponent.value * base.deriv / base.value);
        Ok(Dual { value: v, deriv })
    }
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("{v}"),
            TokenKind::Ident(s) => s.clone(),
            TokenKind::Plus => "+".to_string(),
            TokenKind::Minus => "-".to_string(),
            TokenKind::Star => "*".to_string(),
            TokenKind::Slash => "/".to_string(),
            TokenKind::Caret => "^".to_string(),
            TokenKind::LParen => "(".to_string(),
            TokenKind::RParen => ")".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(source: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                let kind = match c {
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '*' => TokenKind::Star,
                    '/' => TokenKind::Slash,
                    '^' => TokenKind::Caret,
                    '(' => TokenKind::LParen,
                    _ => TokenKind::RParen,
                };
                tokens.push(Token { kind, offset: i });
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // Optional exponent part.
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &source[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{text}`")))?;
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    offset: start,
                });
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphabetic() {
                    i += 1;
                }
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(source[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                return Err(syntax(i, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Recursive descent parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    n: usize,
    r: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.offset).unwrap_or(self.end)
    }

    fn parse_expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.parse_term()?;
        while let Some(tok) = self.peek() {
            let op = match tok.kind {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.parse_term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.parse_unary()?;
        while let Some(tok) = self.peek() {
            let op = match tok.kind {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.parse_unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Node, ExprError> {
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Minus {
                self.pos += 1;
                let inner = self.parse_unary()?;
                return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
            }
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Node, ExprError> {
        let base = self.parse_atom()?;
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Caret {
                self.pos += 1;
                let exponent = self.parse_unary()?;
                return Ok(Node::Binary(
                    BinaryOp::Pow,
                    Box::new(base),
                    Box::new(exponent),
                ));
            }
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Node, ExprError> {
        let tok = match self.next() {
            Some(t) => t,
            None => return Err(syntax(self.end, "unexpected end of input")),
        };
        match tok.kind {
            TokenKind::Number(v) => Ok(Node::Const(v)),
            TokenKind::LParen => {
                let inner = self.parse_expr()?;
                match self.next() {
                    Some(t) if t.kind == TokenKind::RParen => Ok(inner),
                    Some(t) => Err(syntax(t.offset, "expected `)`")),
                    None => Err(syntax(self.end, "unclosed parenthesis")),
                }
            }
            TokenKind::Ident(name) => self.parse_ident(name, tok.offset),
            other => Err(syntax(tok.offset, format!("unexpected `{}`", other.describe()))),
        }
    }

    fn parse_ident(&mut self, name: String, offset: usize) -> Result<Node, ExprError> {
        let func = match name.as_str() {
            "sin" => Some(UnaryOp::Sin),
            "cos" => Some(UnaryOp::Cos),
            "exp" => Some(UnaryOp::Exp),
            "log" => Some(UnaryOp::Log),
            "sqrt" => Some(UnaryOp::Sqrt),
            "abs" => Some(UnaryOp::Abs),
            _ => None,
        };
        if let Some(op) = func {
            match self.next() {
                Some(t) if t.kind == TokenKind::LParen => {}
                _ => return Err(syntax(self.here(), format!("expected `(` after `{name}`"))),
            }
            let arg = self.parse_expr()?;
            match self.next() {
                Some(t) if t.kind == TokenKind::RParen => {}
                Some(t) => return Err(syntax(t.offset, "expected `)`")),
                None => return Err(syntax(self.end, "unclosed parenthesis")),
            }
            return Ok(Node::Unary(op, Box::new(arg)));
        }
        let _ = offset;
        let (family, digits) = name.split_at(
            name.find(|c: char| c.is_ascii_digit())
                .unwrap_or(name.len()),
        );
        let index: Option<usize> = if digits.is_empty() {
            None
        } else {
            digits.parse().ok()
        };
        match (family, index) {
            ("x", Some(i)) if i >= 1 && i <= self.n => Ok(Node::State(i - 1)),
            ("u", Some(j)) if j >= 1 && j <= self.r => Ok(Node::Control(j - 1)),
            _ => Err(ExprError::UnknownSymbol(name)),
        }
    }
}

// ---------------------------------------------------------------------------
// Printing (a fixed point of parse)
// ---------------------------------------------------------------------------

fn node_precedence(node: &Node) -> u8 {
    match node {
        Node::Const(_) | Node::State(_) | Node::Control(_) => 5,
        Node::Unary(UnaryOp::Neg, _) => 3,
        Node::Unary(..) => 5,
        Node::Binary(op, ..) => op.precedence(),
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node) -> fmt::Result {
    match node {
        Node::Const(c) => write!(f, "{c}"),
        Node::State(i) => write!(f, "x{}", i + 1),
        Node::Control(j) => write!(f, "u{}", j + 1),
        Node::Unary(UnaryOp::Neg, a) => {
            write!(f, "-")?;
            write_child(f, a, 4)
        }
        Node::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            write_node(f, a)?;
            write!(f, ")")
        }
        Node::Binary(op, a, b) => {
            let p = op.precedence();
            // Left-associative chains keep the left child unparenthesized at
            // equal precedence; `^` is right-associative, so flip the rule.
            let (lmin, rmin) = match op {
                BinaryOp::Pow => (p + 1, p),
                _ => (p, p + 1),
            };
            write_child(f, a, lmin)?;
            write!(f, "{}", op.symbol())?;
            write_child(f, b, rmin)
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, node: &Node, min_prec: u8) -> fmt::Result {
    if node_precedence(node) < min_prec {
        write!(f, "(")?;
        write_node(f, node)?;
        write!(f, ")")
    } else {
        write_node(f, node)
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_counts_nodes() {
        let t = parse("x1^2 + u1", 1, 1).unwrap();
        assert_eq!(t.node_count(), 5);
    }

    #[test]
    fn empty_input_is_syntax_error_at_zero() {
        match parse("", 1, 1) {
            Err(ExprError::Syntax { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_symbol() {
        match parse("x2*u1", 1, 1) {
            Err(ExprError::UnknownSymbol(s)) => assert_eq!(s, "x2"),
            other => panic!("expected unknown symbol, got {other:?}"),
        }
    }

    #[test]
    fn no_time_symbol() {
        assert!(matches!(
            parse("t + x1", 1, 0),
            Err(ExprError::UnknownSymbol(_))
        ));
    }

    #[test]
    fn eval_basics() {
        let t = parse("x1^2 + u1", 1, 1).unwrap();
        assert_eq!(t.eval(&[3.0], &[1.0]).unwrap(), 10.0);
        let s = parse("sin(x1)", 1, 0).unwrap();
        assert_eq!(s.eval(&[0.0], &[]).unwrap(), 0.0);
        let d = parse("1/x1", 1, 0).unwrap();
        assert!(matches!(d.eval(&[0.0], &[]), Err(ExprError::Domain(_))));
    }

    #[test]
    fn grad_x_examples() {
        let t = parse("x1^2", 1, 0).unwrap();
        assert_eq!(t.grad_x(&[3.0], &[]).unwrap().values, vec![6.0]);

        let c = parse("u1", 1, 1).unwrap();
        assert_eq!(c.grad_x(&[5.0], &[2.0]).unwrap().values, vec![0.0]);

        let p = parse("x1*x2", 2, 0).unwrap();
        assert_eq!(p.grad_x(&[2.0, 7.0], &[]).unwrap().values, vec![7.0, 2.0]);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let t = parse("-x1^2", 1, 0).unwrap();
        assert_eq!(t.eval(&[3.0], &[]).unwrap(), -9.0);
        let u = parse("2^3^2", 0, 0).unwrap();
        assert_eq!(u.eval(&[], &[]).unwrap(), 512.0);
        let v = parse("1 - 2 - 3", 0, 0).unwrap();
        assert_eq!(v.eval(&[], &[]).unwrap(), -4.0);
    }

    #[test]
    fn negative_base_integer_power() {
        let t = parse("x1^2", 1, 0).unwrap();
        assert_eq!(t.eval(&[-3.0], &[]).unwrap(), 9.0);
        assert_eq!(t.grad_x(&[-3.0], &[]).unwrap().values, vec![-6.0]);
    }

    #[test]
    fn abs_kink_flags_nonsmooth() {
        let t = parse("abs(x1)", 1, 0).unwrap();
        let g = t.grad_x(&[0.0], &[]).unwrap();
        assert_eq!(g.values, vec![0.0]);
        assert!(g.nonsmooth);
        let g = t.grad_x(&[-2.0], &[]).unwrap();
        assert_eq!(g.values, vec![-1.0]);
        assert!(!g.nonsmooth);
    }

    #[test]
    fn print_parse_fixed_point() {
        for src in [
            "x1^2 + u1",
            "-(x1 + u1)*x2",
            "sin(x1)*cos(u1) - sqrt(x2)/2",
            "1/(1 + exp(-x1))",
            "2^3^2",
            "x1 - (x2 - u1)",
            "-x1^2",
        ] {
            let t = parse(src, 2, 1).unwrap();
            let printed = t.to_string();
            let reparsed = parse(&printed, 2, 1).unwrap();
            assert_eq!(t, reparsed, "round trip failed for `{src}` -> `{printed}`");
            assert_eq!(printed, reparsed.to_string());
        }
    }

    #[test]
    fn dual_chain_rule() {
        // d/dx [sin(x^2)] = 2x cos(x^2) at x = 0.7
        let t = parse("sin(x1^2)", 1, 0).unwrap();
        let g = t.grad_x(&[0.7], &[]).unwrap();
        let expected = 2.0 * 0.7 * (0.49f64).cos();
        assert!((g.values[0] - expected).abs() < 1e-15);
    }
}
