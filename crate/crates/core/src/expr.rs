//! Exact numeric inputs that can be evaluated at any precision.
//!
//! Accepted syntax: decimals (`1.618`, `2e-3`), ratios (`3/5`), the constant
//! `phi`, `sqrt(...)`, parentheses and the four arithmetic operators.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Node {
    Rational(BigInt, BigInt),
    Phi,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Sqrt(Box<Node>),
}

/// A real number given by an exact expression.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Number {
    node: Node,
    text: String,
}

impl Number {
    pub fn rational(num: i64, den: i64) -> Self {
        assert!(den != 0);
        Number { node: Node::Rational(num.into(), den.into()), text: format!("{num}/{den}") }
    }

    pub fn from_ratio(num: BigInt, den: BigInt) -> Self {
        let text = format!("{num}/{den}");
        Number { node: Node::Rational(num, den), text }
    }

    pub fn golden_ratio() -> Self {
        "phi".parse().unwrap()
    }

    /// Exact value as a fraction, when the expression is rational
    /// without square roots or `phi`.
    pub fn as_ratio(&self) -> Option<(BigInt, BigInt)> {
        rational_value(&self.node)
    }

    /// Enclosure of the value with about `prec` correct bits.
    pub fn eval(&self, prec: u32) -> Result<Real> {
        eval(&self.node, prec + 16).map(|r| r.with_prec(prec)).ok_or_else(|| Error::Number {
            text: self.text.clone(),
            reason: "undefined value (division by zero or negative square root)".into(),
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

fn rational_value(node: &Node) -> Option<(BigInt, BigInt)> {
    let norm = |n: BigInt, d: BigInt| {
        let g = num_integer::Integer::gcd(&n, &d);
        let (n, d) = (n / &g, d / g);
        if d < BigInt::zero() {
            (-n, -d)
        } else {
            (n, d)
        }
    };
    Some(match node {
        Node::Rational(n, d) => norm(n.clone(), d.clone()),
        Node::Phi | Node::Sqrt(_) => return None,
        Node::Neg(a) => {
            let (n, d) = rational_value(a)?;
            (-n, d)
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            let (n1, d1) = rational_value(a)?;
            let (n2, d2) = rational_value(b)?;
            let n2 = if matches!(node, Node::Sub(..)) { -n2 } else { n2 };
            norm(n1 * &d2 + n2 * &d1, d1 * d2)
        }
        Node::Mul(a, b) => {
            let (n1, d1) = rational_value(a)?;
            let (n2, d2) = rational_value(b)?;
            norm(n1 * n2, d1 * d2)
        }
        Node::Div(a, b) => {
            let (n1, d1) = rational_value(a)?;
            let (n2, d2) = rational_value(b)?;
            if n2.is_zero() {
                return None;
            }
            norm(n1 * d2, d1 * n2)
        }
    })
}

fn eval(node: &Node, prec: u32) -> Option<Real> {
    Some(match node {
        Node::Rational(n, d) => {
            if d.is_zero() {
                return None;
            }
            if d.is_one() {
                Real::from_bigint(n.clone(), prec)
            } else {
                Real::from_ratio(n, d, prec)
            }
        }
        Node::Phi => Real::from_int(5, prec).sqrt()?.add(&Real::one(prec)).div(&Real::from_int(2, prec))?,
        Node::Neg(a) => eval(a, prec)?.neg(),
        Node::Add(a, b) => eval(a, prec)?.add(&eval(b, prec)?),
        Node::Sub(a, b) => eval(a, prec)?.sub(&eval(b, prec)?),
        Node::Mul(a, b) => eval(a, prec)?.mul(&eval(b, prec)?),
        Node::Div(a, b) => eval(a, prec)?.div(&eval(b, prec)?)?,
        Node::Sqrt(a) => eval(a, prec)?.sqrt()?,
    })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Option<u8> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> std::result::Result<Node, String> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' { Node::Add(lhs.into(), rhs.into()) } else { Node::Sub(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> std::result::Result<Node, String> {
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = if c == b'*' { Node::Mul(lhs.into(), rhs.into()) } else { Node::Div(lhs.into(), rhs.into()) };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> std::result::Result<Node, String> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(self.factor()?.into()))
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor()
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.decimal(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                match &self.src[start..self.pos] {
                    b"phi" => Ok(Node::Phi),
                    b"sqrt" => {
                        self.expect(b'(')?;
                        let e = self.expr()?;
                        self.expect(b')')?;
                        Ok(Node::Sqrt(e.into()))
                    }
                    other => Err(format!("unknown identifier {:?}", String::from_utf8_lossy(other))),
                }
            }
            Some(c) => Err(format!("unexpected character {:?}", c as char)),
            None => Err("unexpected end of input".into()),
        }
    }

    fn expect(&mut self, c: u8) -> std::result::Result<(), String> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected {:?}", c as char))
        }
    }

    fn decimal(&mut self) -> std::result::Result<Node, String> {
        let mut digits = String::new();
        let mut frac_len = 0i64;
        let mut seen_point = false;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                digits.push(c as char);
                if seen_point {
                    frac_len += 1;
                }
            } else if c == b'.' && !seen_point {
                seen_point = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits.is_empty() {
            return Err("expected digits".into());
        }
        let mut exp10 = -frac_len;
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            let mut sign = 1i64;
            if let Some(&s @ (b'+' | b'-')) = self.src.get(self.pos) {
                sign = if s == b'-' { -1 } else { 1 };
                self.pos += 1;
            }
            let start = self.pos;
            while self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let e: i64 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| "malformed exponent".to_string())?;
            if e > 10_000 {
                return Err("exponent too large".into());
            }
            exp10 += sign * e;
        }
        let n: BigInt = digits.parse().unwrap();
        let ten = BigInt::from(10);
        Ok(if exp10 >= 0 {
            Node::Rational(n * num_traits::pow(ten, exp10 as usize), BigInt::one())
        } else {
            Node::Rational(n, num_traits::pow(ten, (-exp10) as usize))
        })
    }
}

impl FromStr for Number {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s.as_bytes(), pos: 0 };
        let node = p.expr().and_then(|n| if p.peek().is_some() { Err("trailing input".to_string()) } else { Ok(n) });
        node.map(|node| Number { node, text: s.trim().to_string() })
            .map_err(|reason| Error::Number { text: s.to_string(), reason })
    }
}

impl TryFrom<String> for Number {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Number> for String {
    fn from(n: Number) -> String {
        n.text
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Debug for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Number({})", self.text)
    }
}
