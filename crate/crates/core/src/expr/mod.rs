//! Symbolic scalar expressions over the coordinates of a chart.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Coordinates are
//! referenced by index, so the same tree can be printed against any list of
//! names of the right length. Every other module in the crate builds its
//! fields out of these trees: exact partial derivatives come from
//! [`Expr::diff`], numbers from [`Expr::eval`].
//!
//! The arithmetic operators on `Expr` fold constants and drop the obvious
//! identities (`0 + e`, `1 * e`, `e ^ 1`, ...) as the tree is built, so
//! derivative chains stay small without a separate simplification pass.

mod chart;
mod diff;
mod matrix;
mod parse;
mod simplify;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

pub use chart::{Chart, ChartError, Flavor};
pub use diff::central_difference;
pub use matrix::{adjugate, determinant, inverse, mat_mul, mat_vec, transpose, ExprMatrix};
pub use parse::{parse, parse_with, Definitions, ParseError};

/// Elementary functions understood by the parser and differentiator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Asin,
    Acos,
    Atan,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Asin,
        Func::Acos,
        Func::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Asin => "asin",
            Func::Acos => "acos",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> Option<f64> {
        let y = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return None;
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return None;
                }
                x.sqrt()
            }
            Func::Asin => {
                if !(-1.0..=1.0).contains(&x) {
                    return None;
                }
                x.asin()
            }
            Func::Acos => {
                if !(-1.0..=1.0).contains(&x) {
                    return None;
                }
                x.acos()
            }
            Func::Atan => x.atan(),
        };
        y.is_finite().then_some(y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Expr),
    Call(Func, Expr),
}

/// Immutable expression tree; cloning is a reference-count bump.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

/// Evaluation left the domain of some subexpression.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{reason} in `{subexpr}`")]
pub struct EvalError {
    pub reason: &'static str,
    /// The offending subexpression, printed with generic names `x0, x1, ...`.
    pub subexpr: String,
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn constant(c: f64) -> Expr {
        Expr::from_node(Node::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(i: usize) -> Expr {
        Expr::from_node(Node::Var(i))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            if let Some(v) = f.apply(c) {
                return Expr::constant(v);
            }
        }
        Expr::from_node(Node::Call(f, arg))
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        match (self.as_const(), exponent.as_const()) {
            (_, Some(0.0)) => Expr::one(),
            (_, Some(1.0)) => self,
            (Some(1.0), _) => Expr::one(),
            (Some(b), Some(e)) => match pow_value(b, e) {
                Some(v) => Expr::constant(v),
                None => Expr::from_node(Node::Pow(self, exponent)),
            },
            _ => Expr::from_node(Node::Pow(self, exponent)),
        }
    }

    pub fn powi(self, k: i32) -> Expr {
        self.pow(Expr::constant(k as f64))
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }
    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }
    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }
    pub fn ln(self) -> Expr {
        Expr::call(Func::Log, self)
    }
    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self.node() {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Call(_, a) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    pub fn depends_on(&self, i: usize) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(j) => *j == i,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(i),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.depends_on(i) || b.depends_on(i)
            }
        }
    }

    /// Number of nodes in the tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Call(_, a) => 1 + a.size(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Replaces every `Var(i)` with `values[i]`.
    ///
    /// Panics if the expression references an index outside `values`.
    pub fn substitute(&self, values: &[Expr]) -> Expr {
        self.map_vars(&|i| values[i].clone())
    }

    pub fn map_vars(&self, f: &dyn Fn(usize) -> Expr) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(i) => f(*i),
            Node::Neg(a) => -a.map_vars(f),
            Node::Add(a, b) => a.map_vars(f) + b.map_vars(f),
            Node::Sub(a, b) => a.map_vars(f) - b.map_vars(f),
            Node::Mul(a, b) => a.map_vars(f) * b.map_vars(f),
            Node::Div(a, b) => a.map_vars(f) / b.map_vars(f),
            Node::Pow(a, b) => a.map_vars(f).pow(b.map_vars(f)),
            Node::Call(g, a) => Expr::call(*g, a.map_vars(f)),
        }
    }

    /// Shifts every coordinate index by `offset`, e.g. to embed a base-chart
    /// expression into a bundle chart.
    pub fn shift_vars(&self, offset: usize) -> Expr {
        self.map_vars(&|i| Expr::var(i + offset))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let fail = |reason: &'static str| EvalError {
            reason,
            subexpr: self.to_string(),
        };
        let v = match self.node() {
            Node::Const(c) => *c,
            Node::Var(i) => *x.get(*i).ok_or_else(|| fail("coordinate index out of range"))?,
            Node::Neg(a) => -a.eval(x)?,
            Node::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Node::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Node::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Node::Div(a, b) => {
                let d = b.eval(x)?;
                if d == 0.0 {
                    return Err(fail("division by zero"));
                }
                a.eval(x)? / d
            }
            Node::Pow(a, b) => {
                let base = a.eval(x)?;
                let e = b.eval(x)?;
                pow_value(base, e).ok_or_else(|| fail("power outside its domain"))?
            }
            Node::Call(f, a) => {
                let arg = a.eval(x)?;
                f.apply(arg).ok_or_else(|| fail("function argument outside its domain"))?
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail("non-finite value"))
        }
    }

    /// Prints with the given coordinate names, in a form [`parse`] accepts.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut out = String::new();
        self.write(&mut out, &|i| {
            names.get(i).cloned().unwrap_or_else(|| format!("x{i}"))
        });
        out
    }

    fn precedence(&self) -> u8 {
        match self.node() {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(_) => 3,
            Node::Const(c) if *c < 0.0 => 3,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write(&self, out: &mut String, name: &dyn Fn(usize) -> String) {
        let child = |out: &mut String, e: &Expr, parens: bool| {
            if parens {
                out.push('(');
                e.write(out, name);
                out.push(')');
            } else {
                e.write(out, name);
            }
        };
        let p = self.precedence();
        match self.node() {
            Node::Const(c) => out.push_str(&format_number(*c)),
            Node::Var(i) => out.push_str(&name(*i)),
            Node::Neg(a) => {
                out.push('-');
                child(out, a, a.precedence() < 3);
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let op = match self.node() {
                    Node::Add(..) => " + ",
                    Node::Sub(..) => " - ",
                    Node::Mul(..) => "*",
                    _ => "/",
                };
                child(out, a, a.precedence() < p);
                out.push_str(op);
                child(out, b, b.precedence() <= p && !(p == 1 && b.precedence() == 3));
            }
            Node::Pow(a, b) => {
                child(out, a, a.precedence() <= 4);
                out.push('^');
                child(out, b, b.precedence() < 3);
            }
            Node::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out, name);
                out.push(')');
            }
        }
    }
}

fn format_number(c: f64) -> String {
    let a = c.abs();
    if c.fract() == 0.0 && a < 1e15 {
        format!("{c}")
    } else if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{c:e}")
    } else {
        format!("{c}")
    }
}

/// `base^e`, using repeated multiplication for integral exponents so that
/// negative bases stay in the domain.
fn pow_value(base: f64, e: f64) -> Option<f64> {
    let v = if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
        if base == 0.0 && e < 0.0 {
            return None;
        }
        base.powi(e as i32)
    } else {
        if base < 0.0 || (base == 0.0 && e < 0.0) {
            return None;
        }
        base.powf(e)
    };
    v.is_finite().then_some(v)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        self.write(&mut out, &|i| format!("x{i}"));
        f.write_str(&out)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::constant(c)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(0.0), _) => rhs,
            (_, Some(0.0)) => self,
            _ => match rhs.node() {
                Node::Neg(b) => Expr::from_node(Node::Sub(self, b.clone())),
                _ => Expr::from_node(Node::Add(self, rhs)),
            },
        }
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            (Some(0.0), _) => -rhs,
            (_, Some(0.0)) => self,
            _ if self == rhs => Expr::zero(),
            _ => match rhs.node() {
                Node::Neg(b) => Expr::from_node(Node::Add(self, b.clone())),
                _ => Expr::from_node(Node::Sub(self, rhs)),
            },
        }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(0.0)) => Expr::zero(),
            (Some(1.0), _) => rhs,
            (_, Some(1.0)) => self,
            (Some(-1.0), _) => -rhs,
            (_, Some(-1.0)) => -self,
            (Some(a), _) => match rhs.node() {
                // c1 * (c2 * e) -> (c1 c2) * e
                Node::Mul(l, r) if l.as_const().is_some() => {
                    Expr::constant(a * l.as_const().unwrap_or(1.0)) * r.clone()
                }
                _ => Expr::from_node(Node::Mul(self, rhs)),
            },
            // keep constants on the left
            (None, Some(_)) => rhs * self,
            _ => Expr::from_node(Node::Mul(self, rhs)),
        }
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => Expr::constant(a / b),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(1.0)) => self,
            (_, Some(-1.0)) => -self,
            _ if self == rhs => Expr::one(),
            _ => Expr::from_node(Node::Div(self, rhs)),
        }
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(a) => a.clone(),
            Node::Sub(a, b) => Expr::from_node(Node::Sub(b.clone(), a.clone())),
            _ => Expr::from_node(Node::Neg(self)),
        }
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $method:ident),*) => {$(
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $tr::$method(self, Expr::constant(rhs))
            }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $tr::$method(Expr::constant(self), rhs)
            }
        }
        impl<'a> $tr<&'a Expr> for &'a Expr {
            type Output = Expr;
            fn $method(self, rhs: &'a Expr) -> Expr {
                $tr::$method(self.clone(), rhs.clone())
            }
        }
    )*};
}
scalar_ops!(Add add, Sub sub, Mul mul, Div div);

/// Sum of an iterator of expressions (empty sum is zero).
pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
    terms.into_iter().fold(Expr::zero(), |acc, t| acc + t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn constant_evaluates_anywhere() {
        let e = Expr::constant(7.0);
        assert_eq!(e.eval(&[]).unwrap(), 7.0);
        assert_eq!(e.eval(&[1.0, -3.0]).unwrap(), 7.0);
    }

    #[test]
    fn builders_fold_identities() {
        let x = Expr::var(0);
        assert_eq!(Expr::zero() * x.clone().sin(), Expr::zero());
        assert_eq!(x.clone() * 1.0, x);
        assert_eq!(x.clone() - x.clone(), Expr::zero());
        assert_eq!(-(-x.clone()), x);
        assert_eq!(x.clone().pow(Expr::one()), x);
        assert_eq!((Expr::constant(2.0) + 3.0).as_const(), Some(5.0));
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = Expr::var(0).ln() + Expr::var(1);
        let err = e.eval(&[-1.0, 0.0]).unwrap_err();
        assert_eq!(err.subexpr, "log(x0)");
        let d = Expr::one() / Expr::var(0);
        assert_eq!(d.eval(&[0.0]).unwrap_err().reason, "division by zero");
        let s = Expr::var(0).pow(Expr::constant(0.5));
        assert!(s.eval(&[-2.0]).is_err());
        assert_eq!(Expr::var(0).powi(3).eval(&[-2.0]).unwrap(), -8.0);
    }

    #[test]
    fn printing_respects_precedence() {
        let n = names(&["x", "y"]);
        let x = Expr::var(0);
        let y = Expr::var(1);
        let e = (x.clone() + y.clone()) * (x.clone() - y.clone());
        assert_eq!(e.to_text(&n), "(x + y)*(x - y)");
        let p = (-x.clone()).pow(Expr::constant(2.0));
        assert_eq!(p.to_text(&n), "(-x)^2");
        let q = -(x.clone().powi(2));
        assert_eq!(q.to_text(&n), "-x^2");
        let r = x.clone() - (y.clone() - x.clone());
        assert_eq!(r.to_text(&n), "x - (y - x)");
    }

    #[test]
    fn substitution_composes() {
        let e = Expr::var(0) * Expr::var(1);
        let s = e.substitute(&[Expr::var(1).sin(), Expr::constant(2.0)]);
        let v = s.eval(&[0.0, std::f64::consts::FRAC_PI_2]).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
    }
}
